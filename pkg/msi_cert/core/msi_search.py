"""
Maximum-sampling-interval estimate h̄_MSI = max{h̄ : certification succeeds}, by linear scan
or by doubling followed by bisection. Both rely on the certifier being monotone in h̄.
"""

import logging
import threading
from itertools import islice
from typing import Callable, Dict, Optional

from ..config.settings import config
from ..utils.threading import run_in_order
from ..utils.validation import ValidationError, validate_hbar
from .data_analysis import build_qmi, certify_qmi
from .model_analysis import certify_model
from .models import Certificate, QmiSet, SearchResult, SystemModel

logger = logging.getLogger(__name__)


class Certifier:
    """Callable h̄ → certified? that keeps every certificate it produced"""

    def __init__(self, certify: Callable[[int], Certificate], label: str = "certifier"):
        self._certify = certify
        self.label = label
        self.certificates: Dict[int, Certificate] = {}
        self._lock = threading.Lock()

    def __call__(self, hbar: int) -> bool:
        certificate = self._certify(hbar)
        with self._lock:
            self.certificates[hbar] = certificate
        return certificate.certified

    def certificate(self, hbar: Optional[int]) -> Optional[Certificate]:
        return self.certificates.get(hbar) if hbar is not None else None


def model_certifier(model: SystemModel, gain_mode: str = "exact", pin_passivity: Optional[bool] = None,
                    solver: Optional[str] = None, epsilon: Optional[float] = None) -> Certifier:
    return Certifier(
        lambda h: certify_model(model, h, gain_mode, pin_passivity, solver, epsilon),
        label=f"model/{gain_mode}",
    )


def data_certifier(data, K, gain_mode: str = "exact", pin_passivity: Optional[bool] = None,
                   solver: Optional[str] = None, epsilon: Optional[float] = None) -> Certifier:
    """Certifier over a DataSet or a prebuilt QmiSet; the QMI is built once"""
    qmi = data if isinstance(data, QmiSet) else build_qmi(data)
    return Certifier(
        lambda h: certify_qmi(qmi, K, h, gain_mode, pin_passivity, solver, epsilon),
        label=f"data/{gain_mode}",
    )


def _resolve_cap(hmax_cap: Optional[int]) -> int:
    return validate_hbar(config.get_msi_cap() if hmax_cap is None else hmax_cap, "hmax_cap")


def _monotone(history) -> bool:
    """No certified h̄ above a failed one"""
    failed = [h for h, ok in history if not ok]
    if not failed:
        return True
    lowest_failure = min(failed)
    return not any(ok and h > lowest_failure for h, ok in history)


def linear_search(certifier: Callable[[int], bool], hmax_cap: Optional[int] = None,
                  workers: Optional[int] = None) -> SearchResult:
    """Scan h̄ = 1, 2, ... up to the cap; with workers > 1 a window of candidates runs concurrently"""
    cap = _resolve_cap(hmax_cap)
    workers = config.get_workers() if workers is None else max(1, int(workers))
    result = SearchResult(msi=None, cap=cap)

    hbar = 1
    while hbar <= cap:
        window = list(range(hbar, min(hbar + workers, cap + 1)))
        verdicts = run_in_order(certifier, window, workers)
        result.calls += len(window)
        result.history.extend(zip(window, verdicts))
        if not all(verdicts):
            first_failure = window[verdicts.index(False)]
            result.msi = first_failure - 1 or None
            if not _monotone(result.history):
                result.inconsistent = True
                result.message = f"certifier is not monotone around hbar={first_failure}"
                logger.warning("Linear search: %s", result.message)
            break
        logger.info("Linear search: certified up to hbar=%d", window[-1])
        hbar = window[-1] + 1
    else:
        result.msi = cap
        result.cap_exhausted = True
        result.message = f"certified for every tested hbar up to the cap {cap}"

    if result.msi is None and not result.inconsistent:
        result.message = "not certified at hbar=1"
    return result


def exponential_search(certifier: Callable[[int], bool], hmax_cap: Optional[int] = None,
                       spot_checks: int = 0) -> SearchResult:
    """Doubling until the first failure, then bisection; at most 2·log₂(h̄_MSI)+2 calls.

    Doubling and bisection never try above a failure or below a success, so a
    non-monotone certifier only shows up through ``spot_checks``: extra attempts at the
    largest untried values below the estimate, all of which must certify.
    """
    cap = _resolve_cap(hmax_cap)
    result = SearchResult(msi=None, cap=cap)

    def attempt(hbar: int) -> bool:
        ok = bool(certifier(hbar))
        result.calls += 1
        result.history.append((hbar, ok))
        logger.debug("Exponential search: hbar=%d -> %s", hbar, ok)
        return ok

    if not attempt(1):
        result.message = "not certified at hbar=1"
        return result

    lo, hi = 1, None
    while hi is None:
        if lo == cap:
            result.msi = cap
            result.cap_exhausted = True
            result.message = f"certified for every tested hbar up to the cap {cap}"
            return result
        candidate = min(2 * lo, cap)
        if attempt(candidate):
            lo = candidate
        else:
            hi = candidate

    while hi - lo > 1:
        mid = (lo + hi) // 2
        if attempt(mid):
            lo = mid
        else:
            hi = mid

    result.msi = lo
    tried = {h for h, _ in result.history}
    untried = (h for h in range(lo - 1, 0, -1) if h not in tried)
    for hbar in list(islice(untried, max(0, spot_checks))):
        attempt(hbar)
    if not _monotone(result.history):
        result.inconsistent = True
        result.message = "certifier responses are not monotone"
        logger.warning("Exponential search: %s", result.message)
    logger.info("Exponential search: MSI estimate %d after %d calls", lo, result.calls)
    return result


def search(certifier: Callable[[int], bool], method: Optional[str] = None,
           hmax_cap: Optional[int] = None, workers: Optional[int] = None,
           spot_checks: int = 0) -> SearchResult:
    method = config.get_search() if method is None else method
    if method == "linear":
        return linear_search(certifier, hmax_cap, workers)
    if method == "exponential":
        return exponential_search(certifier, hmax_cap, spot_checks)
    raise ValidationError(f"search must be 'linear' or 'exponential', got {method!r}")
