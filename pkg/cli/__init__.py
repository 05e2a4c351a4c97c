from .config import RunConfig, load_config, parse_config, validate
from .run import EXIT_CONFIG, EXIT_PASS, EXIT_SOLVER, EXIT_VERDICT, build_problem, diagnose, mms_study, run
