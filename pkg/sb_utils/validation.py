from typing import List
import logging

from pydantic import ValidationError

logger = logging.getLogger(__name__)


def describe_validation_error(exc: ValidationError, source: str = "") -> List[str]:
    """
    Turn a pydantic ValidationError into one readable line per problem,
    e.g. "config.toml: [network].n_nodes: Input should be greater than or equal to 2".
    """
    lines = []
    prefix = f"{source}: " if source else ""
    for err in exc.errors():
        loc = [str(part) for part in err.get("loc", ())]
        if len(loc) >= 2:
            where = f"[{loc[0]}].{'.'.join(loc[1:])}"
        elif loc:
            where = f"[{loc[0]}]"
        else:
            where = "<root>"
        lines.append(f"{prefix}{where}: {err.get('msg', 'invalid value')}")
    logger.debug("Validation failed with %d problems", len(lines))
    return lines
