"""
Experiment config validator.
Parses a TOML experiment file and prints every problem found, one per line.

    python validate_config.py config/reference.toml
"""
import sys
from pathlib import Path

from dotenv import load_dotenv

from src.domain.errors import ConfigError
from src.infrastructure.config import load_config

load_dotenv()


def validate_configuration(path: Path) -> int:
    try:
        cfg = load_config(path)
    except ConfigError as e:
        print(f"❌ {e}")
        for line in e.diagnostics:
            print(f"   {line}")
        return 2

    print(f"✅ {path} is valid")
    print(f"   nodes: {cfg.network.n_nodes}, CH_max: {cfg.network.ch_max}, d0: {cfg.radio.d0:.3f} m")
    print(f"   weights: alpha={cfg.weights.alpha} beta={cfg.weights.beta} gamma={cfg.weights.gamma}")
    return 0


if __name__ == "__main__":
    if len(sys.argv) != 2:
        print("usage: python validate_config.py CONFIG.toml")
        sys.exit(2)
    sys.exit(validate_configuration(Path(sys.argv[1])))
