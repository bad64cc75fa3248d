from __future__ import annotations

import logging

logger = logging.getLogger("wsn_repair")


def __getattr__(name):
    return getattr(logger, name)
