from .agent import GeneticAgent, fitness_normalize, ga_next, roulette_probabilities

__all__ = ["GeneticAgent", "fitness_normalize", "ga_next", "roulette_probabilities"]
