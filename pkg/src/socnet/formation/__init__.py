from .ged import (GedResult, ged_bipartite_turan, ged_brute_force, ged_complete, ged_kstar,
                  ged_star, ged_to_target, kstar_graph, target_graph)
from .model import (EPS, FormationAborted, FormationParams, FormationState, UtilityCache,
                    best_response, essential_nodes, is_pairwise_stable, run_recursive_formation,
                    utilities, utility)
from .presets import (Interval, Topology, parse_topology, preset_base, preset_conditions,
                      preset_intervals)
from .deviation import DeviationResult, classify, deviated_value, deviation_experiment
