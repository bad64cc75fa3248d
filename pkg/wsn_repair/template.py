from __future__ import annotations

import decimal
import functools
import math
from collections.abc import Callable
from importlib import resources
from typing import Any

import jinja2
from jinja2.sandbox import SandboxedEnvironment


def uptodate():
    return True


class ReportLoader(jinja2.BaseLoader):
    """
    Serves the shipped report template as "base" and, when given, the
    user's template as "custom" (which may `{% extends "base" %}`).
    """

    def __init__(self, base_template: str, custom_template: str | None):
        self.base_template = base_template
        self.custom_template = custom_template

    def get_source(
        self, environment: jinja2.Environment, template: str
    ) -> tuple[str, str | None, Callable[..., bool]]:
        if template == "base":
            return (
                self.base_template,
                "wsn_repair/template_files/report.txt.j2",
                uptodate,
            )

        if self.custom_template and template == "custom":
            return self.custom_template, None, uptodate

        raise jinja2.TemplateNotFound(template)


class TemplateError(Exception):
    pass


def number(value: float | int) -> str:
    """Shortest text that parses back to the same float; integral values drop `.0`."""
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return repr(value) if isinstance(value, float) else str(value)


def hops(value: float | int) -> str:
    return "inf" if value == math.inf else str(int(value))


def optional(value: Any, placeholder: str = "-") -> str:
    return placeholder if value is None else str(value)


def seconds(value_us: int | float | None) -> str:
    if value_us is None:
        return "none"
    if value_us == math.inf:
        return "inf"
    return f"{decimal.Decimal(int(value_us)) / decimal.Decimal(1_000_000):f}"


def ratio(value: float | None, precision: int = 4) -> str:
    if value is None:
        return "none"
    return f"{value:.{precision}f}"


def flag(value: bool) -> str:
    return "1" if value else "0"


def install_filters(env: jinja2.Environment) -> jinja2.Environment:
    env.filters["number"] = number
    env.filters["hops"] = hops
    env.filters["optional"] = optional
    env.filters["seconds"] = seconds
    env.filters["ratio"] = ratio
    env.filters["flag"] = flag
    return env


@functools.cache
def get_environment() -> jinja2.Environment:
    env = jinja2.Environment(
        loader=jinja2.PackageLoader("wsn_repair", "template_files"),
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
        undefined=jinja2.StrictUndefined,
        autoescape=False,
    )
    return install_filters(env)


def render(template_name: str, **context: Any) -> str:
    return get_environment().get_template(template_name).render(**context)


def read_template_file(template: str) -> str:
    return (resources.files("wsn_repair") / "template_files" / template).read_text()


def render_report(custom_template: str | None = None, **context: Any) -> str:
    loader = ReportLoader(
        base_template=read_template_file("report.txt.j2"),
        custom_template=custom_template,
    )
    env = SandboxedEnvironment(
        loader=loader,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    install_filters(env)
    try:
        return env.get_template("custom" if custom_template else "base").render(
            **context
        )
    except jinja2.exceptions.TemplateError as exc:
        raise TemplateError(f"report template: {exc}") from exc
