"""Round-synchronous rumor spreading lab: PULL, restricted PULL, VPULL and dominance tools."""

from .errors import ConfigError, ExactError, GraphError, ProtocolError, RumorLabError
from .graph import (Graph, gen_basic, gen_lct, gen_separation, gen_tightness, path_degree_sum,
                    path_max_degree, validate)
from .rng import CounterRng
from .engine import (AdversaryStrategy, LowestIdAdversary, ProtocolSpec, RoundTrace, run_trials,
                     run_until_broadcast, stalling_adversary, step_combined, step_pull, step_push,
                     step_rpull)

__version__ = "0.1.0"
