"""
JSON reading and writing of instances and assignments.
Documents are checked against a JSON schema, then against the instance invariants.
"""
import json
from typing import Any, Dict, Mapping

import jsonschema

from core import (
    INFINITE,
    Assignment,
    Edge,
    Instance,
    LaminarConstraint,
    SubgraphConstraint,
    is_infinite,
    validate_instance,
    MISSING_DEGREE_BOUND,
    UNEXPECTED_DEGREE_BOUND,
    UNKNOWN_EDGE_IN_SUBGRAPH,
    NON_LAMINAR_FAMILY,
)
from errors import InstanceSyntaxError, InstanceValidationError, SchemaError
from logger import get_logger

logger = get_logger(__name__)

_BOUND = {'oneOf': [{'type': 'integer', 'minimum': 0}, {'const': 'inf'}]}
_ID = {'type': 'string', 'minLength': 1}

INSTANCE_SCHEMA: Dict[str, Any] = {
    '$schema': 'http://json-schema.org/draft-07/schema#',
    'type': 'object',
    'additionalProperties': False,
    'required': ['nodes', 'edges'],
    'properties': {
        'nodes': {'type': 'array', 'items': _ID},
        'edges': {
            'type': 'array',
            'items': {
                'type': 'object',
                'additionalProperties': False,
                'required': ['id', 'u', 'v'],
                'properties': {
                    'id': _ID,
                    'u': _ID,
                    'v': _ID,
                    'w': {'type': 'integer', 'minimum': 0},
                    'c': _BOUND,
                },
            },
        },
        'subgraphs': {
            'type': 'array',
            'items': {
                'type': 'object',
                'additionalProperties': False,
                'required': ['id', 'edges', 'b'],
                'properties': {
                    'id': _ID,
                    'edges': {'type': 'array', 'items': _ID},
                    'b': {'type': 'object', 'additionalProperties': {'type': 'integer', 'minimum': 0}},
                },
            },
        },
        'laminar': {
            'type': 'array',
            'items': {
                'type': 'object',
                'additionalProperties': False,
                'required': ['id', 'nodes', 'g'],
                'properties': {
                    'id': _ID,
                    'nodes': {'type': 'array', 'items': _ID},
                    'g': _BOUND,
                },
            },
        },
    },
}

ASSIGNMENT_SCHEMA: Dict[str, Any] = {
    'type': 'object',
    'additionalProperties': False,
    'required': ['x'],
    'properties': {
        'x': {'type': 'object', 'additionalProperties': {'type': 'integer'}},
        'objective': {'type': 'integer'},
    },
}


def _pointer(path) -> str:
    parts = [str(part).replace('~', '~0').replace('/', '~1') for part in path]
    return "/" + "/".join(parts) if parts else "/"


def _load(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceSyntaxError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e


def _check_schema(document: Any, schema: Mapping[str, Any]):
    try:
        jsonschema.validate(instance=document, schema=schema)
    except jsonschema.ValidationError as e:
        raise SchemaError(_pointer(e.absolute_path), e.message) from e


def _bound(value):
    return INFINITE if value == 'inf' else value


def _issue_pointer(document: Mapping[str, Any], issue) -> str:
    """Map a validation issue back to the JSON pointer of the offending entry."""
    indexes = {
        'edge': {entry['id']: i for i, entry in enumerate(document.get('edges', []))},
        'subgraph': {entry['id']: i for i, entry in enumerate(document.get('subgraphs', []))},
        'laminar set': {entry['id']: i for i, entry in enumerate(document.get('laminar', []))},
    }
    if issue.kind == NON_LAMINAR_FAMILY:
        return f"/laminar/{indexes['laminar set'].get(issue.location[1], 0)}/nodes"
    location = str(issue.location)
    if location == 'nodes':
        return "/nodes"
    for prefix, collection in (('laminar set', 'laminar'), ('subgraph', 'subgraphs'), ('edge', 'edges')):
        if not location.startswith(prefix + ' '):
            continue
        rest = location[len(prefix) + 1:]
        for entry_id, index in sorted(indexes[prefix].items(), key=lambda item: -len(item[0])):
            if rest == entry_id or rest.startswith(entry_id + ' '):
                suffix = rest[len(entry_id):].strip()
                base = f"/{collection}/{index}"
                if prefix == 'edge':
                    return base + {'weight': '/w', 'capacity': '/c'}.get(suffix, '')
                if prefix == 'subgraph':
                    if issue.kind in (MISSING_DEGREE_BOUND, UNEXPECTED_DEGREE_BOUND):
                        return base + "/b"
                    if issue.kind == UNKNOWN_EDGE_IN_SUBGRAPH:
                        return base + "/edges"
                    if suffix.startswith('node '):
                        return base + "/b/" + suffix[len('node '):]
                    return base
                return base + ("/g" if suffix == 'bound' else "/nodes")
    return "/"


def instance_from_dict(document: Mapping[str, Any]) -> Instance:
    """
    Build and validate an instance from a decoded JSON document.

    Raises:
        SchemaError: if the document has the wrong shape or breaks an instance invariant
    """
    _check_schema(document, INSTANCE_SCHEMA)
    inst = Instance(
        nodes=tuple(document['nodes']),
        edges=tuple(
            Edge(id=e['id'], u=e['u'], v=e['v'], w=e.get('w', 1), c=_bound(e.get('c', 'inf')))
            for e in document['edges']
        ),
        subgraphs=tuple(
            SubgraphConstraint(id=s['id'], edge_ids=frozenset(s['edges']), b=dict(s['b']))
            for s in document.get('subgraphs', [])
        ),
        laminar_sets=tuple(
            LaminarConstraint(id=lam['id'], node_ids=frozenset(lam['nodes']), g=_bound(lam['g']))
            for lam in document.get('laminar', [])
        ),
    )
    try:
        return validate_instance(inst)
    except InstanceValidationError as e:
        issue = e.issues[0]
        raise SchemaError(_issue_pointer(document, issue), f"{issue.kind}: {issue.message}") from e


def parse_instance(text: str) -> Instance:
    """
    Parse an instance document.

    Raises:
        InstanceSyntaxError: if the text is not JSON
        SchemaError: with the JSON pointer of the first problem
    """
    return instance_from_dict(_load(text))


def instance_to_dict(inst: Instance) -> Dict[str, Any]:
    def bound(value):
        return 'inf' if is_infinite(value) else value

    return {
        'nodes': list(inst.nodes),
        'edges': [
            {'id': e.id, 'u': e.u, 'v': e.v, 'w': e.w, 'c': bound(e.c)}
            for e in inst.edges
        ],
        'subgraphs': [
            {'id': s.id, 'edges': sorted(s.edge_ids), 'b': dict(s.b)}
            for s in inst.subgraphs
        ],
        'laminar': [
            {'id': lam.id, 'nodes': sorted(lam.node_ids), 'g': bound(lam.g)}
            for lam in inst.laminar_sets
        ],
    }


def serialize_instance(inst: Instance) -> str:
    """Canonical text: sorted keys, two-space indent, entries in instance order."""
    return json.dumps(instance_to_dict(inst), indent=2, sort_keys=True) + "\n"


def load_instance(path: str) -> Instance:
    """
    Read an instance file.

    Raises:
        InstanceSyntaxError: if the file cannot be read or is not JSON
        SchemaError: if the document is not a valid instance
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise InstanceSyntaxError(f"cannot read {path}: {e.strerror}") from e
    logger.debug(f"Loaded {len(text)} bytes from {path}")
    return parse_instance(text)


def parse_assignment(text: str, inst: Instance) -> Assignment:
    """
    Parse {"x": {edge: value}}; missing edges are zero.

    Raises:
        SchemaError: on the wrong shape
        UnknownEdgeError: if an edge is not in the instance
    """
    document = _load(text)
    _check_schema(document, ASSIGNMENT_SCHEMA)
    return Assignment.from_values(inst, document['x'])


def serialize_assignment(assignment: Assignment) -> str:
    return json.dumps({'objective': assignment.objective, 'x': dict(assignment.x)}, indent=2, sort_keys=True) + "\n"


def read_text(path: str) -> str:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return f.read()
    except OSError as e:
        raise InstanceSyntaxError(f"cannot read {path}: {e.strerror}") from e


def dumps(document: Any) -> str:
    return json.dumps(document, indent=2, sort_keys=True) + "\n"
