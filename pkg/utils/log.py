"""
Color-coded console output for the experiment commands.

Every helper prints one colorama-styled line and mirrors the plain text to
the "experiments.console" logger, so logs/experiments.log keeps a full
transcript of each run next to the debug output of the numerical modules.
"""

import datetime
import logging
from pathlib import Path
from typing import Optional

from colorama import Fore, Style, init

init(autoreset=True)

_console = logging.getLogger("experiments.console")

# the experiments tree keeps its own file; the colored lines are the console view
_parent = logging.getLogger("experiments")
_parent.addHandler(logging.NullHandler())
_parent.propagate = False


# ---------------------------------------------------------------------------
# Colors
# ---------------------------------------------------------------------------

class C:
    """Color shortcuts for experiment output."""
    HEADER = Fore.CYAN + Style.BRIGHT
    STEP = Fore.BLUE + Style.BRIGHT
    OK = Fore.GREEN + Style.BRIGHT
    WARN = Fore.YELLOW + Style.BRIGHT
    ERR = Fore.RED + Style.BRIGHT
    DIM = Style.DIM
    CELL = Fore.MAGENTA + Style.BRIGHT
    VALUE = Fore.GREEN
    RESET = Style.RESET_ALL


def _ts() -> str:
    return datetime.datetime.now().strftime("%H:%M:%S")


def _emit(color: str, tag: str, msg: str, level: int = logging.INFO) -> None:
    prefix = f"[{_ts()}] {tag} " if tag else f"[{_ts()}] "
    print(f"{color}{prefix}{C.RESET if not tag else ''}{msg}{C.RESET}")
    _console.log(level, f"{tag} {msg}".strip())


# ---------------------------------------------------------------------------
# Run-level messages
# ---------------------------------------------------------------------------

def header(msg: str) -> None:
    rule = "=" * 60
    print(f"\n{C.HEADER}{rule}\n  {msg}\n{rule}{C.RESET}\n")
    _console.info(msg)


def step(msg: str) -> None:
    _emit(C.STEP, ">>", msg)


def info(msg: str) -> None:
    _emit(C.DIM, "", msg)


def ok(msg: str) -> None:
    _emit(C.OK, "OK", msg)


def warn(msg: str) -> None:
    _emit(C.WARN, "WARN", msg, logging.WARNING)


def err(msg: str) -> None:
    _emit(C.ERR, "ERR", msg, logging.ERROR)


# ---------------------------------------------------------------------------
# Sweep cells and results
# ---------------------------------------------------------------------------

def cell_label(k: int, n_cells: int) -> str:
    return f"k={k} N={n_cells}"


def progress(current: int, total: int, label: str, msg: str) -> None:
    """One line per finished cell: [3/20] k=3 N=50: error 1.2e-08"""
    print(
        f"{C.DIM}[{_ts()}]{C.RESET} {C.STEP}[{current}/{total}]{C.RESET} "
        f"{C.CELL}{label}{C.RESET}: {msg}"
    )
    _console.debug(f"[{current}/{total}] {label}")


def rate_verdict(observed: Optional[float], expected: float, slack: float = 0.3) -> str:
    """
    Observed rate colored by how it compares with the expected one: green
    within slack, yellow below, dim when there is nothing to compare.
    """
    if observed is None:
        return f"{C.DIM}n/a{C.RESET}"
    color = C.OK if observed >= expected - slack else C.WARN
    return f"{color}{observed:.3f}{C.RESET}"


def summary_table(title: str, rows: list[tuple[str, str]]) -> None:
    """Label/value pairs under a title, labels left-aligned."""
    print(f"\n{C.HEADER}{title}{C.RESET}")
    width = max((len(label) for label, _ in rows), default=0)
    for label, value in rows:
        print(f"  {label:<{width}}  {C.VALUE}{value}{C.RESET}")
    print()
    _console.info(f"{title}: " + "; ".join(f"{label}={value}" for label, value in rows))


# ---------------------------------------------------------------------------
# File logging
# ---------------------------------------------------------------------------

def setup_verbose_logging(name: str = "experiments", level: int = logging.DEBUG) -> logging.Logger:
    """
    Logger for one experiment module. The first call attaches a DEBUG file
    handler on logs/experiments.log to the "experiments" parent, which every
    experiment logger and the console transcript propagate to.
    """
    parent = _parent
    if not any(isinstance(h, logging.FileHandler) for h in parent.handlers):
        log_dir = Path(__file__).resolve().parent.parent / "logs"
        log_dir.mkdir(parents=True, exist_ok=True)
        fh = logging.FileHandler(log_dir / "experiments.log")
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(logging.Formatter(
            "[%(asctime)s] %(levelname)-8s %(name)s: %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        ))
        parent.addHandler(fh)
        parent.setLevel(logging.DEBUG)

    logger = logging.getLogger(name if name == "experiments" else f"experiments.{name}")
    logger.setLevel(level)
    return logger
