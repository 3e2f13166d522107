"""Consensus correlation graphs over entities mined from a mention corpus."""

from .consensus import (ConsensusResult, MultiCG, SimpleAverage, SolverConfig,
                        objective, simple_average, solve_multicg, update_M,
                        update_O)
from .corpus import (DailySeries, Entity, EntityCatalog, MarketSeries,
                     MentionRecord, MentionSetTable, TimeWindow,
                     build_daily_series, build_mention_sets, extract_mentions,
                     load_catalog, load_market_series, parse_mention_corpus)
from .evaluation import (EvalReport, RankedLists, avg_dcg, dcg_ceiling, dcg_k,
                         rank_rows, relevance_grades)
from .exceptions import EmptyCorpusError, InputError, MultiCGError, NumericalError
from .factors import (CorrelationMatrix, GraphSet, GroundTruthSet,
                      build_cooccurrence_graph, build_factor_set,
                      build_ground_truth, build_lagged_graph,
                      build_volume_graph, read_matrix, write_matrix)
from .series import (LagSpec, SmoothingConfig, apply_lag, log_returns, pearson,
                     rolling_volatility, sma_smooth)
from .synth import NoiseConfig, PlantedScenario, generate_planted, score_recovery

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
