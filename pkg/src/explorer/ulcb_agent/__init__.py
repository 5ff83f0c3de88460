from .agent import ULCBAgent, fit_history, ulcb_propose

__all__ = ["ULCBAgent", "fit_history", "ulcb_propose"]
