"""Input validators for the command line.

Every validator returns (is_valid, error_message, sanitized_value) and
never raises, so the CLI can report all bad input with exit code 1.
"""

import json
import re
from pathlib import Path
from typing import Optional, Tuple

from stability_lab.coeffexpr.nodes import free_params
from stability_lab.coeffexpr.parser import parse
from stability_lab.coeffexpr.problem import Problem
from stability_lab.errors import ParseError

_NAME = re.compile(r"^[^\W\d]\w*$")
_RESERVED = {"t", "sin", "cos", "exp", "ln", "sqrt", "cumint"}


class ParamValidator:
    """Validates parameter names and complex values from flags."""

    MAX_LENGTH = 200

    @staticmethod
    def validate_name(name: str) -> Tuple[bool, str, Optional[str]]:
        name = (name or "").strip()
        if not name or len(name) > 64:
            return False, "Invalid parameter name length", None
        if not _NAME.match(name):
            return False, f"Invalid parameter name: {name!r}", None
        if name in _RESERVED:
            return False, f"{name!r} is reserved in expressions", None
        return True, "", name

    @staticmethod
    def validate_value(text: str) -> Tuple[bool, str, Optional[complex]]:
        """Accept "re", "re,im" or a Python complex literal such as "0.5+1j"."""
        text = (text or "").strip()
        if not text or len(text) > ParamValidator.MAX_LENGTH:
            return False, "Invalid value length", None
        try:
            if "," in text:
                re_part, im_part = text.split(",", 1)
                value = complex(float(re_part), float(im_part))
            else:
                value = complex(text.replace(" ", ""))
        except ValueError:
            return False, f"Not a number: {text!r}", None
        if value != value or abs(value) == float("inf"):
            return False, f"Value must be finite: {text!r}", None
        return True, "", value

    def validate_assignment(self, text: str) -> Tuple[bool, str, Optional[tuple[str, complex]]]:
        """Validate ``name=re[,im]``."""
        if not text or "=" not in text:
            return False, f"Expected name=re[,im], got {text!r}", None
        name, value = text.split("=", 1)
        ok, error, clean_name = self.validate_name(name)
        if not ok:
            return False, error, None
        ok, error, clean_value = self.validate_value(value)
        if not ok:
            return False, error, None
        return True, "", (clean_name, clean_value)


class ProblemValidator:
    """Validates problem references: catalog ids, JSON documents, expressions."""

    @staticmethod
    def validate_expression(text: str, t0: float = 0.0) -> Tuple[bool, str, Optional[str]]:
        try:
            parse(text, t0)
        except ParseError as e:
            return False, f"Invalid expression: {e}", None
        return True, "", text.strip()

    @staticmethod
    def validate_document(text: str) -> Tuple[bool, str, Optional[Problem]]:
        """Validate an inline JSON problem (or a path to one)."""
        source = text.strip()
        if not source.startswith("{"):
            path = Path(source)
            if not path.is_file():
                return False, f"Not a catalog id, JSON document or file: {text!r}", None
            source = path.read_text()
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as e:
            return False, f"Invalid problem JSON: {e}", None
        if not isinstance(doc, dict):
            return False, "Problem JSON must be an object", None
        try:
            problem = Problem.from_json(doc)
            expressions = (problem.p_expr, problem.q_expr)
        except (ValueError, TypeError, KeyError) as e:
            return False, f"Invalid problem: {e}", None
        for name in sorted(set().union(*(free_params(e) for e in expressions))):
            ok, error, _ = ParamValidator.validate_name(name)
            if not ok:
                return False, error, None
        return True, "", problem


class OutputPathValidator:
    """Validates report destinations."""

    @staticmethod
    def validate_output_path(path_str: Optional[str]) -> Tuple[bool, str, Optional[Path]]:
        """None or "-" means stdout."""
        if path_str in (None, "", "-"):
            return True, "", None
        path = Path(path_str)
        if path.exists() and path.is_dir():
            return False, f"Output path is a directory: {path_str}", None
        if not path.parent.exists():
            return False, f"Output directory does not exist: {path.parent}", None
        return True, "", path
