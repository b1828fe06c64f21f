import logging
from pathlib import Path

import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
NA_REP = "NA"


def read_table(path, **kwargs):
    """Read a tab-separated file with a header row, every cell kept as text."""
    return pd.read_csv(
        path,
        sep="\t",
        dtype=str,
        keep_default_na=False,
        na_filter=False,
        encoding="utf-8",
        **kwargs,
    )


def write_table(path, frame):
    """
    Write ``frame`` as TSV with LF endings, 17 significant digits for floats
    and ``NA`` for undefined values.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(
        path,
        sep="\t",
        index=False,
        float_format=FLOAT_FORMAT,
        na_rep=NA_REP,
        lineterminator="\n",
        encoding="utf-8",
    )
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path
