from .agent import GradientAgent, pg_gradient, pg_loss, pg_propose, pg_train

__all__ = ["GradientAgent", "pg_gradient", "pg_loss", "pg_propose", "pg_train"]
