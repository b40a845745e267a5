"""Three-stage group-buying auctions for joint cloudlet placement and resource assignment."""
from .haf import haf
from .harness import (DeviationProbe, ap_deviation_gain, ap_deviation_sweep, brute_force_matching_oracle,
                      complexity_probe, mu_deviation_gain)
from .matching import MatchingOutcome, asc, frm, frmg, profit_matrix
from .model import (AccessPoint, Cloudlet, MechanismParams, MobileUser, Scenario, Scheme, cost_of_service,
                    load_scenario, ppr, reserve_price, save_scenario)
from .pipeline import Engine, run_pipeline
from .revenue import (RevenueReport, RevenueTable, SortedGroup, acrc, find_s, gtr, select_m_tacd,
                      select_m_topk, sort_group)
from .scenario import generate_scenario, target_mu_count
from .settlement import (Settlement, check_budget_balance, check_individual_rationality, settle,
                         untruthful_utility)

__version__ = "0.1.0"
