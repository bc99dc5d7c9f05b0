"""One-way ANOVA over per-language scores with four grouping schemes.

The grouping schemes partition the 15 task languages by genetic
affiliation, morphological typology, geographical region and resource
tier; singleton clusters are merged into an "Other" group or omitted so
every factor level has at least two members.

p-values come from the upper tail of the F distribution, evaluated
through the regularized incomplete beta function:

    p = I_{d2/(d2 + d1*F)}(d2/2, d1/2)

The incomplete beta uses the continued-fraction expansion (modified
Lentz) with the usual symmetry switch at x > (a+1)/(a+b+2); that is
accurate well past the 1e-6 target here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import LANGUAGES
from .errors import CorpusValidationError, DegenerateDataError

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-12
_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            break
    return h


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_pvalue(f: float, df_between: int, df_within: int) -> float:
    """Upper-tail probability of the F distribution."""
    if df_between < 1 or df_within < 1:
        raise CorpusValidationError("degrees of freedom must be positive")
    if math.isinf(f):
        return 0.0
    if f <= 0.0:
        return 1.0
    x = df_within / (df_within + df_between * f)
    return betainc_regularized(df_within / 2.0, df_between / 2.0, x)


@dataclass(frozen=True)
class GroupingScheme:
    name: str
    groups: dict[str, frozenset[str]]
    omitted: frozenset[str] = frozenset()

    def __post_init__(self):
        seen: set[str] = set()
        for label, members in self.groups.items():
            if len(members) < 2:
                raise CorpusValidationError(
                    f"scheme {self.name!r}: group {label!r} has fewer than 2 members"
                )
            if seen & members:
                raise CorpusValidationError(f"scheme {self.name!r}: groups overlap")
            seen |= members
        if seen & self.omitted:
            raise CorpusValidationError(f"scheme {self.name!r}: omitted language is grouped")
        if seen | self.omitted != LANGUAGES:
            raise CorpusValidationError(
                f"scheme {self.name!r}: groups + omitted must cover the 15 languages"
            )

    @property
    def grouped_languages(self) -> frozenset[str]:
        out: set[str] = set()
        for members in self.groups.values():
            out |= members
        return frozenset(out)


def builtin_groupings() -> dict[str, GroupingScheme]:
    """The four standard schemes.

    The typology clusters are the unique six-group reading consistent with
    df (5, 9) over all 15 languages; Amharic is the single omitted
    language (geography scheme).
    """
    fs = frozenset
    return {
        "genetic": GroupingScheme(
            name="genetic",
            groups={
                "IndoEuropean": fs({"en", "es", "de", "hi", "uk", "ru", "it", "fr"}),
                "Semitic": fs({"ar", "am", "he"}),
                "Other": fs({"zh", "tt", "hin", "ja"}),
            },
        ),
        "typology": GroupingScheme(
            name="typology",
            groups={
                "FusionalSVO": fs({"es", "it", "fr"}),
                "Templatic": fs({"ar", "am", "he"}),
                "CaseRich": fs({"uk", "ru", "de"}),
                "Agglutinative": fs({"tt", "ja"}),
                "Isolating": fs({"en", "zh"}),
                "Other": fs({"hi", "hin"}),
            },
        ),
        "geography": GroupingScheme(
            name="geography",
            groups={
                "WesternEurope": fs({"en", "es", "de", "it", "fr"}),
                "EasternEurope": fs({"uk", "ru", "tt"}),
                "MiddleEast": fs({"ar", "he"}),
                "SouthAsia": fs({"hi", "hin"}),
                "EastAsia": fs({"zh", "ja"}),
            },
            omitted=fs({"am"}),
        ),
        "resource": GroupingScheme(
            name="resource",
            groups={
                "High": fs({"en", "zh", "es", "de", "fr", "ru", "it", "ja"}),
                "Medium": fs({"ar", "hi", "he", "uk"}),
                "Low": fs({"am", "tt", "hin"}),
            },
        ),
    }


@dataclass(frozen=True)
class AnovaResult:
    ss_between: float
    ss_within: float
    df_between: int
    df_within: int
    f_stat: float
    eta_squared: float
    p_value: float

    def to_json_dict(self) -> dict:
        return {
            "ss_between": self.ss_between,
            "ss_within": self.ss_within,
            "df_between": self.df_between,
            "df_within": self.df_within,
            "f_stat": self.f_stat,
            "eta_squared": self.eta_squared,
            "p_value": self.p_value,
        }


def anova_from_groups(groups: dict[str, list[float]]) -> AnovaResult:
    """Classical one-way ANOVA on explicit observation groups."""
    if len(groups) < 2:
        raise CorpusValidationError("ANOVA needs at least two groups")
    all_obs = [y for obs in groups.values() for y in obs]
    n_total = len(all_obs)
    k = len(groups)
    grand_mean = sum(all_obs) / n_total
    ss_between = 0.0
    ss_within = 0.0
    for obs in groups.values():
        group_mean = sum(obs) / len(obs)
        ss_between += len(obs) * (group_mean - grand_mean) ** 2
        ss_within += sum((y - group_mean) ** 2 for y in obs)
    df_between = k - 1
    df_within = n_total - k
    if df_within < 1:
        raise CorpusValidationError("ANOVA needs more observations than groups")
    if ss_between == 0.0 and ss_within == 0.0:
        raise DegenerateDataError("all observations are identical")
    if ss_within == 0.0:
        f_stat = math.inf
        p_value = 0.0
    else:
        f_stat = (ss_between / df_between) / (ss_within / df_within)
        p_value = f_pvalue(f_stat, df_between, df_within)
    eta_squared = ss_between / (ss_between + ss_within)
    return AnovaResult(
        ss_between=ss_between,
        ss_within=ss_within,
        df_between=df_between,
        df_within=df_within,
        f_stat=f_stat,
        eta_squared=eta_squared,
        p_value=p_value,
    )


def anova_oneway(scores: dict[str, float], scheme: GroupingScheme) -> AnovaResult:
    """One observation per language, grouped by the scheme."""
    missing = sorted(scheme.grouped_languages - set(scores))
    if missing:
        raise CorpusValidationError(
            f"scheme {scheme.name!r}: missing scores for {missing}"
        )
    groups = {
        label: [scores[lang] for lang in sorted(members)]
        for label, members in scheme.groups.items()
    }
    return anova_from_groups(groups)


def anova_report(scores: dict[str, float], schemes) -> dict[str, AnovaResult | dict]:
    """One row per scheme; a failing scheme becomes an error entry without
    affecting the others."""
    report: dict[str, AnovaResult | dict] = {}
    for scheme in schemes:
        try:
            report[scheme.name] = anova_oneway(scores, scheme)
        except (CorpusValidationError, DegenerateDataError) as exc:
            report[scheme.name] = {"error": str(exc)}
    return report


def render_report(report: dict) -> str:
    """Aligned-text rendering of an ANOVA report."""
    lines = [f"{'scheme':<12} {'eta^2':>8} {'F':>10} {'df':>10} {'p':>10}"]
    for name, result in report.items():
        if isinstance(result, dict):
            lines.append(f"{name:<12} error: {result['error']}")
            continue
        df = f"({result.df_between},{result.df_within})"
        lines.append(
            f"{name:<12} {result.eta_squared:>8.3f} {result.f_stat:>10.3f} "
            f"{df:>10} {result.p_value:>10.5f}"
        )
    return "\n".join(lines)


def report_to_json(report: dict) -> dict:
    return {
        name: (result.to_json_dict() if isinstance(result, AnovaResult) else result)
        for name, result in report.items()
    }
