"""Resilience analysis for stochastic games with disturbances."""

from .errors import (AssumptionViolated, BudgetExceeded, Infeasible, NotConverged,
                     OverlappingComponents, ParseError, PreconditionViolated, ResilienceError,
                     StrategyIncompatible, ValidationError)
from .model import (BOTTOM, Action, ActionKind, BreakingPoint, ExtendedCount, Game, Objective,
                    Player, SGD, Strategy, compare_breaking_points, induced_mc, validate)

__version__ = "0.1.0"
