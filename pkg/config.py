import os
import sys
import logging
from dotenv import load_dotenv
import structlog

# Load environment variables
load_dotenv()

class Config:
    """Configuration class for the sidecap capacity toolkit"""

    # Output Configuration
    DEFAULT_UNIT: str = os.getenv('DEFAULT_UNIT', 'bits')

    # Optimization Configuration
    ALPHA_BRACKET: float = float(os.getenv('ALPHA_BRACKET', '10'))
    OPTIMIZE_TOL: float = float(os.getenv('OPTIMIZE_TOL', '1e-10'))
    OPTIMIZE_MAX_ITER: int = int(os.getenv('OPTIMIZE_MAX_ITER', '200'))

    # Numerical Tolerances
    PSD_RTOL: float = float(os.getenv('PSD_RTOL', '1e-9'))
    SINGULAR_RTOL: float = float(os.getenv('SINGULAR_RTOL', '1e-12'))

    # Monte Carlo Configuration
    MC_SAMPLES: int = int(os.getenv('MC_SAMPLES', '200000'))
    MC_BATCHES: int = int(os.getenv('MC_BATCHES', '20'))
    MC_SEED: int = int(os.getenv('MC_SEED', '1'))
    MC_PASS_SIGMA: float = float(os.getenv('MC_PASS_SIGMA', '4'))

    # Sweep Configuration
    SWEEP_WORKERS: int = int(os.getenv('SWEEP_WORKERS', '1'))

    # Logging Configuration
    LOG_LEVEL: str = os.getenv('LOG_LEVEL', 'WARNING')
    LOG_FILE: str = os.getenv('LOG_FILE', '')
    LOG_FORMAT: str = os.getenv('LOG_FORMAT', 'console')

    @classmethod
    def validate(cls) -> bool:
        """Validate numeric and enumerated settings"""
        problems = []

        if cls.DEFAULT_UNIT not in ('bits', 'nats'):
            problems.append(f"DEFAULT_UNIT must be 'bits' or 'nats', got {cls.DEFAULT_UNIT!r}")
        if cls.ALPHA_BRACKET <= 0:
            problems.append(f"ALPHA_BRACKET must be positive, got {cls.ALPHA_BRACKET}")
        if cls.OPTIMIZE_TOL <= 0:
            problems.append(f"OPTIMIZE_TOL must be positive, got {cls.OPTIMIZE_TOL}")
        if cls.OPTIMIZE_MAX_ITER < 1:
            problems.append(f"OPTIMIZE_MAX_ITER must be at least 1, got {cls.OPTIMIZE_MAX_ITER}")
        if cls.MC_SAMPLES < 2:
            problems.append(f"MC_SAMPLES must be at least 2, got {cls.MC_SAMPLES}")
        if cls.MC_BATCHES < 2:
            problems.append(f"MC_BATCHES must be at least 2, got {cls.MC_BATCHES}")
        if cls.MC_PASS_SIGMA <= 0:
            problems.append(f"MC_PASS_SIGMA must be positive, got {cls.MC_PASS_SIGMA}")
        if cls.SWEEP_WORKERS < 1:
            problems.append(f"SWEEP_WORKERS must be at least 1, got {cls.SWEEP_WORKERS}")

        for problem in problems:
            logging.error(f"Invalid configuration: {problem}")

        return not problems

    @classmethod
    def setup_logging(cls):
        """Setup logging configuration"""
        log_level = getattr(logging, cls.LOG_LEVEL.upper(), logging.WARNING)

        if cls.LOG_FORMAT.lower() == 'json':
            renderer = structlog.processors.JSONRenderer()
        else:
            renderer = structlog.dev.ConsoleRenderer(colors=False)

        formatter = structlog.stdlib.ProcessorFormatter(
            processor=renderer,
            foreign_pre_chain=[
                structlog.stdlib.add_log_level,
                structlog.stdlib.add_logger_name,
                structlog.processors.TimeStamper(fmt="iso"),
            ],
        )

        # stdout is reserved for command output
        handlers = [logging.StreamHandler(sys.stderr)]

        # Create logs directory if it doesn't exist
        if cls.LOG_FILE:
            log_dir = os.path.dirname(cls.LOG_FILE)
            if log_dir and not os.path.exists(log_dir):
                os.makedirs(log_dir)
            handlers.append(logging.FileHandler(cls.LOG_FILE))

        for handler in handlers:
            handler.setFormatter(formatter)

        # Configure logging
        logging.basicConfig(level=log_level, handlers=handlers, force=True)

        # Set specific logger levels
        logging.getLogger('numexpr').setLevel(logging.WARNING)

# Global config instance
config = Config()
