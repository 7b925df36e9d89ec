"""Static discovery of model identifiers in Python sources.

Files are parsed into ASTs (comments and string literals therefore never
match); a file is in scope for a library when it really imports it, and
call sites matching the library's loader patterns have their identifier
argument resolved either from a string literal or through conservative
constant propagation (single assignment, same module, bound before use).
Anything fancier stays Unresolved rather than guessed.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence


@dataclass(frozen=True)
class CallPattern:
    callee: str
    arg_index: int = 0
    kwarg: str | None = None

    @property
    def parts(self) -> tuple[str, ...]:
        return tuple(self.callee.split("."))


@dataclass(frozen=True)
class ApiSignature:
    library: str
    import_module: str
    import_symbol: str | None = None
    calls: tuple[CallPattern, ...] = ()


class SignatureCatalogError(ValueError):
    pass


def load_signature_catalog(path: str | Path) -> list[ApiSignature]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    signatures = []
    for entry in doc.get("signatures", ()):
        import_pattern = entry.get("import") or {}
        module = import_pattern.get("module", "")
        if not module:
            raise SignatureCatalogError(f"signature for {entry.get('library')!r} lacks an import module")
        calls = tuple(
            CallPattern(
                callee=c["callee"],
                arg_index=int(c.get("arg_index", 0)),
                kwarg=c.get("kwarg"),
            )
            for c in entry.get("calls", ())
        )
        if len({c.callee for c in calls}) != len(calls):
            raise SignatureCatalogError(f"duplicate call patterns for {entry.get('library')!r}")
        signatures.append(
            ApiSignature(
                library=entry["library"],
                import_module=module,
                import_symbol=import_pattern.get("symbol"),
                calls=calls,
            )
        )
    if not signatures:
        raise SignatureCatalogError(f"{path}: no signatures")
    return signatures


class SourceParseError(ValueError):
    """File is not parseable Python; the caller skips it with a diagnostic."""


class ResolutionRoute(str, Enum):
    LITERAL = "literal"
    PROPAGATED_CONSTANT = "propagated_constant"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class ScanFinding:
    path: str
    library: str
    line: int
    callee: str
    identifier: str | None
    route: ResolutionRoute

    def to_document(self) -> dict:
        return {
            "path": self.path,
            "library": self.library,
            "line": self.line,
            "callee": self.callee,
            "identifier": self.identifier,
            "route": self.route.value,
        }


def _parse(source: str, path: str = "<source>") -> ast.Module:
    try:
        return ast.parse(source)
    except SyntaxError as exc:
        raise SourceParseError(f"{path}: {exc.msg} (line {exc.lineno})") from exc


def _module_matches(imported: str, pattern: str) -> bool:
    return imported == pattern or imported.startswith(pattern + ".")


def _signature_imported(tree: ast.Module, signature: ApiSignature) -> bool:
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for alias in node.names:
                if _module_matches(alias.name, signature.import_module):
                    if signature.import_symbol is None:
                        return True
        elif isinstance(node, ast.ImportFrom):
            if node.module and _module_matches(node.module, signature.import_module):
                if signature.import_symbol is None:
                    return True
                if any(alias.name == signature.import_symbol for alias in node.names):
                    return True
    return False


def match_signatures(source: str, signatures: Sequence[ApiSignature], path: str = "<source>") -> list[str]:
    """Libraries whose import pattern is satisfied by a real import node.

    Returned in catalog order, deduplicated. Raises SourceParseError on
    non-Python input: matching requires import nodes, not a text grep.
    """
    tree = _parse(source, path)
    matched: list[str] = []
    for signature in signatures:
        if signature.library in matched:
            continue
        if _signature_imported(tree, signature):
            matched.append(signature.library)
    return matched


def _callee_parts(node: ast.expr) -> tuple[str, ...]:
    parts: list[str] = []
    current = node
    while isinstance(current, ast.Attribute):
        parts.append(current.attr)
        current = current.value
    if isinstance(current, ast.Name):
        parts.append(current.id)
    parts.reverse()
    return tuple(parts)


class _BindingCollector(ast.NodeVisitor):
    """Counts every binding of each name and records simple string-literal
    assignments, to support the conservative propagation rule."""

    def __init__(self):
        self.binding_counts: dict[str, int] = {}
        self.string_assignments: dict[str, tuple[str, int]] = {}  # name -> (value, line)

    def _bind(self, name: str):
        self.binding_counts[name] = self.binding_counts.get(name, 0) + 1

    def _bind_target(self, target: ast.expr):
        if isinstance(target, ast.Name):
            self._bind(target.id)
        elif isinstance(target, (ast.Tuple, ast.List)):
            for elt in target.elts:
                self._bind_target(elt)
        elif isinstance(target, ast.Starred):
            self._bind_target(target.value)

    def visit_Assign(self, node: ast.Assign):
        for target in node.targets:
            self._bind_target(target)
        if (
            len(node.targets) == 1
            and isinstance(node.targets[0], ast.Name)
            and isinstance(node.value, ast.Constant)
            and isinstance(node.value.value, str)
        ):
            self.string_assignments[node.targets[0].id] = (node.value.value, node.lineno)
        self.generic_visit(node)

    def visit_AnnAssign(self, node: ast.AnnAssign):
        self._bind_target(node.target)
        if (
            isinstance(node.target, ast.Name)
            and isinstance(node.value, ast.Constant)
            and isinstance(node.value.value, str)
        ):
            self.string_assignments[node.target.id] = (node.value.value, node.lineno)
        self.generic_visit(node)

    def visit_AugAssign(self, node: ast.AugAssign):
        self._bind_target(node.target)
        self.generic_visit(node)

    def visit_NamedExpr(self, node: ast.NamedExpr):
        self._bind_target(node.target)
        self.generic_visit(node)

    def visit_For(self, node: ast.For):
        self._bind_target(node.target)
        self.generic_visit(node)

    def visit_AsyncFor(self, node: ast.AsyncFor):
        self._bind_target(node.target)
        self.generic_visit(node)

    def visit_withitem(self, node: ast.withitem):
        if node.optional_vars is not None:
            self._bind_target(node.optional_vars)
        self.generic_visit(node)

    def visit_comprehension(self, node: ast.comprehension):
        self._bind_target(node.target)
        self.generic_visit(node)

    def _bind_arguments(self, args: ast.arguments):
        for arg in (
            list(args.posonlyargs) + list(args.args) + list(args.kwonlyargs)
        ):
            self._bind(arg.arg)
        if args.vararg:
            self._bind(args.vararg.arg)
        if args.kwarg:
            self._bind(args.kwarg.arg)

    def visit_FunctionDef(self, node: ast.FunctionDef):
        self._bind(node.name)
        self._bind_arguments(node.args)
        self.generic_visit(node)

    def visit_AsyncFunctionDef(self, node: ast.AsyncFunctionDef):
        self._bind(node.name)
        self._bind_arguments(node.args)
        self.generic_visit(node)

    def visit_Lambda(self, node: ast.Lambda):
        self._bind_arguments(node.args)
        self.generic_visit(node)

    def visit_ClassDef(self, node: ast.ClassDef):
        self._bind(node.name)
        self.generic_visit(node)

    def visit_Import(self, node: ast.Import):
        for alias in node.names:
            self._bind(alias.asname or alias.name.split(".")[0])

    def visit_ImportFrom(self, node: ast.ImportFrom):
        for alias in node.names:
            self._bind(alias.asname or alias.name)

    def visit_Global(self, node: ast.Global):
        for name in node.names:
            self._bind(name)

    def visit_Nonlocal(self, node: ast.Nonlocal):
        for name in node.names:
            self._bind(name)


def _resolve_identifier(
    node: ast.expr | None, bindings: _BindingCollector, call_line: int
) -> tuple[str | None, ResolutionRoute]:
    if node is None:
        return None, ResolutionRoute.UNRESOLVED
    if isinstance(node, ast.Constant) and isinstance(node.value, str):
        return node.value, ResolutionRoute.LITERAL
    if isinstance(node, ast.Name):
        name = node.id
        if bindings.binding_counts.get(name, 0) == 1 and name in bindings.string_assignments:
            value, line = bindings.string_assignments[name]
            if line < call_line:
                return value, ResolutionRoute.PROPAGATED_CONSTANT
    return None, ResolutionRoute.UNRESOLVED


def scan_invocations(
    source: str, signatures: Sequence[ApiSignature], path: str = "<source>"
) -> list[ScanFinding]:
    """Findings for every call site matching an imported signature's call
    patterns. Files with matching imports but no such calls yield an empty
    list. Among overlapping patterns the most specific (longest dotted)
    match wins, ties broken by catalog order."""
    tree = _parse(source, path)
    active = [s for s in signatures if _signature_imported(tree, s)]
    if not active:
        return []
    bindings = _BindingCollector()
    bindings.visit(tree)
    findings: list[ScanFinding] = []
    for node in ast.walk(tree):
        if not isinstance(node, ast.Call):
            continue
        parts = _callee_parts(node.func)
        if not parts:
            continue
        candidates: list[tuple[int, int, ApiSignature, CallPattern]] = []
        for order, signature in enumerate(active):
            for pattern in signature.calls:
                p = pattern.parts
                if len(p) <= len(parts) and parts[-len(p) :] == p:
                    candidates.append((-len(p), order, signature, pattern))
        if not candidates:
            continue
        candidates.sort(key=lambda c: (c[0], c[1]))
        _, _, signature, pattern = candidates[0]
        arg_node: ast.expr | None = None
        if pattern.kwarg is not None:
            for kw in node.keywords:
                if kw.arg == pattern.kwarg:
                    arg_node = kw.value
                    break
        if arg_node is None and len(node.args) > pattern.arg_index:
            candidate = node.args[pattern.arg_index]
            if not isinstance(candidate, ast.Starred):
                arg_node = candidate
        identifier, route = _resolve_identifier(arg_node, bindings, node.lineno)
        findings.append(
            ScanFinding(
                path=path,
                library=signature.library,
                line=node.lineno,
                callee=".".join(parts),
                identifier=identifier,
                route=route,
            )
        )
    return findings


@dataclass
class TreeScanResult:
    findings: list[ScanFinding] = field(default_factory=list)
    matched_files: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    scanned_files: int = 0


def scan_source_tree(root: str | Path, signatures: Sequence[ApiSignature]) -> TreeScanResult:
    """Scan every *.py file under a directory; unparseable files are skipped
    with a per-file diagnostic."""
    root = Path(root)
    result = TreeScanResult()
    for path in sorted(root.rglob("*.py")):
        rel = str(path.relative_to(root))
        result.scanned_files += 1
        try:
            source = path.read_text(encoding="utf-8")
            libraries = match_signatures(source, signatures, rel)
            if libraries:
                result.matched_files.append(rel)
                result.findings.extend(scan_invocations(source, signatures, rel))
        except SourceParseError as exc:
            result.diagnostics.append(str(exc))
        except OSError as exc:
            result.diagnostics.append(f"{rel}: unreadable ({exc})")
    return result


def write_findings(findings: Iterable[ScanFinding], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for finding in findings:
            fh.write(json.dumps(finding.to_document(), sort_keys=True, ensure_ascii=False) + "\n")
