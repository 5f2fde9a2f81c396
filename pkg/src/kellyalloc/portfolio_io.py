"""Portfolio documents: parse and serialize.

The on-disk format is YAML:

.. code-block:: yaml

    companies:
      - name: A
        currency: USD
        market_cap: 225B
        scenarios:
          - label: total loss
            intrinsic_value: 0
            probability: 0.05
          - label: base case
            intrinsic_value: 270B
            probability: 0.60
          - label: strong case
            intrinsic_value: 420B
            probability: 0.35

Monetary amounts accept magnitude suffixes K/M/B/T (thousand through
trillion); suffixed amounts are scaled exactly via ``decimal`` before
conversion to float. ``currency`` is informational only: the model works in
fractions of capital per company, so mixed-currency portfolios are fine.

Structural problems (bad YAML, missing or mistyped fields) raise
:class:`ParseError` with location hints. Well-formed documents whose values
break model rules (probabilities not summing to one, no downside scenario,
non-positive market cap) raise :class:`ValidationError` from the model
layer.
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation

import yaml

from .errors import ParseError
from .model import Company, Scenario

_SUFFIX_SCALE = {
    "K": Decimal(10) ** 3,
    "M": Decimal(10) ** 6,
    "B": Decimal(10) ** 9,
    "T": Decimal(10) ** 12,
}


def parse_amount(value, field: str = "amount") -> float:
    """Parse a monetary amount: a plain number or a string with an optional
    K/M/B/T suffix ("225B" -> 225e9)."""
    if isinstance(value, bool):
        raise ParseError("expected a number, got a boolean", field=field)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        scale = Decimal(1)
        if text and text[-1].upper() in _SUFFIX_SCALE:
            scale = _SUFFIX_SCALE[text[-1].upper()]
            text = text[:-1]
        try:
            return float(Decimal(text) * scale)
        except InvalidOperation:
            raise ParseError(f"malformed amount {value!r}", field=field) from None
    raise ParseError(f"expected a number or amount string, got {type(value).__name__}", field=field)


def _require_mapping(node, field: str) -> dict:
    if not isinstance(node, dict):
        raise ParseError(f"expected a mapping, got {type(node).__name__}", field=field)
    return node


def _require_text(node, field: str) -> str:
    if not isinstance(node, str):
        raise ParseError(f"expected text, got {type(node).__name__}", field=field)
    return node


def _require_probability(node, field: str) -> float:
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ParseError(f"expected a probability number, got {type(node).__name__}", field=field)
    return float(node)


def _parse_scenario(node, field: str, index: int) -> Scenario:
    mapping = _require_mapping(node, field)
    for key in ("intrinsic_value", "probability"):
        if key not in mapping:
            raise ParseError("scenario is missing a required key", field=f"{field}.{key}")
    label = mapping.get("label", f"scenario {index + 1}")
    return Scenario(
        label=_require_text(label, f"{field}.label"),
        intrinsic_value=parse_amount(mapping["intrinsic_value"], f"{field}.intrinsic_value"),
        probability=_require_probability(mapping["probability"], f"{field}.probability"),
    )


def _parse_company(node, field: str, allow_no_downside: bool) -> Company:
    mapping = _require_mapping(node, field)
    for key in ("name", "market_cap", "scenarios"):
        if key not in mapping:
            raise ParseError("company is missing a required key", field=f"{field}.{key}")
    scenarios_node = mapping["scenarios"]
    if not isinstance(scenarios_node, list) or not scenarios_node:
        raise ParseError("scenarios must be a non-empty list", field=f"{field}.scenarios")
    scenarios = tuple(
        _parse_scenario(s, f"{field}.scenarios[{i}]", i) for i, s in enumerate(scenarios_node)
    )
    return Company(
        name=_require_text(mapping["name"], f"{field}.name"),
        market_cap=parse_amount(mapping["market_cap"], f"{field}.market_cap"),
        scenarios=scenarios,
        currency=_require_text(mapping.get("currency", ""), f"{field}.currency"),
        require_downside=not allow_no_downside,
    )


def parse_portfolio(text: str, allow_no_downside: bool = False) -> list[Company]:
    """Parse a YAML portfolio document into validated companies.

    ``allow_no_downside`` skips the requirement that each company have at
    least one scenario below market cap; everything else is still checked.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = None
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            line = mark.line + 1
        raise ParseError(f"invalid YAML: {exc}", line=line) from None
    if doc is None:
        raise ParseError("portfolio document is empty")
    mapping = _require_mapping(doc, "document")
    if "companies" not in mapping:
        raise ParseError("document is missing a required key", field="companies")
    companies_node = mapping["companies"]
    if not isinstance(companies_node, list) or not companies_node:
        raise ParseError("companies must be a non-empty list", field="companies")
    return [
        _parse_company(node, f"companies[{i}]", allow_no_downside)
        for i, node in enumerate(companies_node)
    ]


def serialize_portfolio(companies) -> str:
    """Serialize companies back to YAML. Round-trips exactly through
    :func:`parse_portfolio` (floats are emitted at full precision)."""
    doc = {
        "companies": [
            {
                "name": c.name,
                **({"currency": c.currency} if c.currency else {}),
                "market_cap": float(c.market_cap),
                "scenarios": [
                    {
                        "label": s.label,
                        "intrinsic_value": float(s.intrinsic_value),
                        "probability": float(s.probability),
                    }
                    for s in c.scenarios
                ],
            }
            for c in companies
        ]
    }
    return yaml.safe_dump(doc, sort_keys=False)
