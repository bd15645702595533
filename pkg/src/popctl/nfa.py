"""NFA data model, text format, and gadget generators.

An agent template is a complete nondeterministic finite automaton with a
distinguished initial and target state.  States and actions are identified
by their declaration index; names are metadata.  Transition sets are stored
as integer bitmasks over state indices so that the game solvers downstream
can work on dense bit patterns.
"""

from __future__ import annotations

from dataclasses import dataclass

SINK_NAME = "_sink"


class NfaError(ValueError):
    """Invalid automaton structure or text."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def bits(mask: int):
    """Iterate the set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class Nfa:
    """Complete NFA with a target state.

    ``delta[q][a]`` is a nonempty bitmask of successor state indices.
    Instances are immutable and safe to share across solver runs.
    """

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    initial: int
    target: int
    delta: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.states)
        if len(set(self.states)) != n:
            raise NfaError("duplicate state names")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise NfaError("duplicate action names")
        if not self.alphabet:
            raise NfaError("empty alphabet")
        if not 0 <= self.initial < n:
            raise NfaError("initial state out of range")
        if not 0 <= self.target < n:
            raise NfaError("target state out of range")
        if len(self.delta) != n:
            raise NfaError("delta must have one row per state")
        full = (1 << n) - 1
        for q, row in enumerate(self.delta):
            if len(row) != len(self.alphabet):
                raise NfaError(f"delta row for {self.states[q]} has wrong arity")
            for a, mask in enumerate(row):
                if mask == 0:
                    raise NfaError(
                        f"incomplete: no transition from {self.states[q]} "
                        f"on {self.alphabet[a]}"
                    )
                if mask & ~full:
                    raise NfaError("successor mask out of range")

    @property
    def n(self) -> int:
        return len(self.states)

    def state_index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise NfaError(f"unknown state {name!r}") from None

    def action_index(self, name: str) -> int:
        try:
            return self.alphabet.index(name)
        except ValueError:
            raise NfaError(f"unknown action {name!r}") from None

    def succ_mask(self, q: int, a: int) -> int:
        return self.delta[q][a]

    def successors(self, q: int, a: int) -> tuple[int, ...]:
        """Successor state indices of ``q`` on action ``a``, ascending."""
        return tuple(bits(self.delta[q][a]))

    def is_sink(self, q: int) -> bool:
        own = 1 << q
        return all(self.delta[q][a] == own for a in range(len(self.alphabet)))

    def target_reachable_from(self) -> int:
        """Bitmask of states from which the target is reachable at all."""
        rev = [0] * self.n
        for q in range(self.n):
            for a in range(len(self.alphabet)):
                for r in bits(self.delta[q][a]):
                    rev[r] |= 1 << q
        seen = 1 << self.target
        frontier = [self.target]
        while frontier:
            r = frontier.pop()
            for q in bits(rev[r] & ~seen):
                seen |= 1 << q
                frontier.append(q)
        return seen


def build_nfa(
    states: list[str],
    alphabet: list[str],
    initial: str,
    target: str,
    edges: list[tuple[str, str, str]],
    complete: bool = True,
) -> Nfa:
    """Assemble an Nfa from named edges.

    Missing (state, action) pairs are routed to an auto-added sink state
    named ``_sink`` (which loops on every action) so that the completeness
    invariant holds.  With ``complete=False`` missing pairs raise instead.
    """
    index = {s: i for i, s in enumerate(states)}
    act = {a: i for i, a in enumerate(alphabet)}
    rows = [[0] * len(alphabet) for _ in states]
    for src, action, dst in edges:
        rows[index[src]][act[action]] |= 1 << index[dst]

    incomplete = any(0 in row for row in rows)
    if incomplete:
        if not complete:
            raise NfaError("incomplete transition relation")
        if SINK_NAME in states:
            raise NfaError(
                f"state name {SINK_NAME!r} is reserved for auto-completion"
            )
        states = states + [SINK_NAME]
        sink = len(states) - 1
        for row in rows:
            for a in range(len(alphabet)):
                if row[a] == 0:
                    row[a] = 1 << sink
        rows.append([1 << sink] * len(alphabet))

    return Nfa(
        states=tuple(states),
        alphabet=tuple(alphabet),
        initial=index[initial],
        target=index[target],
        delta=tuple(tuple(row) for row in rows),
    )


# ---------------------------------------------------------------------------
# Text format


def parse_nfa(text: str) -> Nfa:
    """Parse the line-based NFA format.

    Directives appear in fixed order (states, init, target, alphabet),
    followed by one ``src action dst`` line per transition edge.  ``#``
    starts a comment.  Unspecified (state, action) pairs are completed
    with the ``_sink`` state.
    """
    directives = ["states", "init", "target", "alphabet"]
    values: dict[str, list[str]] = {}
    edges: list[tuple[str, str, str, int]] = []
    stage = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if stage < len(directives):
            key = directives[stage]
            prefix = key + ":"
            if not line.startswith(prefix):
                raise NfaError(f"expected '{key}:' directive", lineno)
            values[key] = line[len(prefix):].split()
            stage += 1
            continue
        parts = line.split()
        if len(parts) != 3:
            raise NfaError("expected transition 'src action dst'", lineno)
        edges.append((parts[0], parts[1], parts[2], lineno))

    if stage < len(directives):
        raise NfaError(f"missing '{directives[stage]}:' directive")

    states = values["states"]
    alphabet = values["alphabet"]
    if not states:
        raise NfaError("no states declared")
    if not alphabet:
        raise NfaError("empty alphabet")
    if len(values["init"]) != 1:
        raise NfaError("init must name exactly one state")
    if len(values["target"]) != 1:
        raise NfaError("target must name exactly one state")
    state_set = set(states)
    action_set = set(alphabet)
    for name in values["init"] + values["target"]:
        if name not in state_set:
            raise NfaError(f"unknown state {name!r}")

    checked: list[tuple[str, str, str]] = []
    for src, action, dst, lineno in edges:
        if src not in state_set:
            raise NfaError(f"unknown state {src!r}", lineno)
        if dst not in state_set:
            raise NfaError(f"unknown state {dst!r}", lineno)
        if action not in action_set:
            raise NfaError(f"unknown action {action!r}", lineno)
        checked.append((src, action, dst))

    return build_nfa(states, alphabet, values["init"][0], values["target"][0], checked)


def serialize_nfa(nfa: Nfa) -> str:
    """Emit the text format with states, actions, and edges in index order."""
    lines = [
        "states: " + " ".join(nfa.states),
        "init: " + nfa.states[nfa.initial],
        "target: " + nfa.states[nfa.target],
        "alphabet: " + " ".join(nfa.alphabet),
    ]
    for q in range(nfa.n):
        for a in range(len(nfa.alphabet)):
            for r in bits(nfa.delta[q][a]):
                lines.append(f"{nfa.states[q]} {nfa.alphabet[a]} {nfa.states[r]}")
    return "\n".join(lines) + "\n"


def normalize_target_sink(nfa: Nfa) -> Nfa:
    """Rebuild the automaton so the target is a sink.

    If the target already loops on every action this is the identity.
    Otherwise a fresh action sends the old target to a new winning sink
    and every other state to a new losing sink; the winning sink becomes
    the target.
    """
    if nfa.is_sink(nfa.target):
        return nfa
    for name in ("_smile", "_frown"):
        if name in nfa.states:
            raise NfaError(f"state name {name!r} is reserved")
    if "_finish" in nfa.alphabet:
        raise NfaError("action name '_finish' is reserved")

    states = nfa.states + ("_smile", "_frown")
    smile = len(nfa.states)
    frown = smile + 1
    alphabet = nfa.alphabet + ("_finish",)
    rows = []
    for q in range(nfa.n):
        finish = 1 << smile if q == nfa.target else 1 << frown
        rows.append(tuple(nfa.delta[q]) + (finish,))
    rows.append(tuple([1 << smile] * len(alphabet)))
    rows.append(tuple([1 << frown] * len(alphabet)))
    return Nfa(states, alphabet, nfa.initial, smile, tuple(rows))


# ---------------------------------------------------------------------------
# Gadget generators

GADGET_KINDS = (
    "split",
    "linear",
    "time",
    "counter",
    "doubleexp",
    "nested",
    "memory-example",
)

_PARAMETRIC = {"linear", "counter", "doubleexp", "nested"}


@dataclass(frozen=True)
class GadgetSpec:
    """Selector for one of the built-in automaton families."""

    kind: str
    parameter: int = 0

    def __post_init__(self):
        if self.kind not in GADGET_KINDS:
            raise NfaError(f"unknown gadget kind {self.kind!r}")
        if self.kind in _PARAMETRIC and self.parameter < 1:
            raise NfaError(f"gadget {self.kind!r} needs a parameter >= 1")

    @classmethod
    def parse(cls, text: str) -> "GadgetSpec":
        """Parse ``kind`` or ``kind:parameter`` as used by the CLI."""
        if ":" in text:
            kind, _, param = text.partition(":")
            try:
                value = int(param)
            except ValueError:
                raise NfaError(f"bad gadget parameter {param!r}") from None
            return cls(kind, value)
        return cls(text)


def generate(spec: GadgetSpec) -> Nfa:
    """Build the requested gadget family member.

    Generation is deterministic: identical specs produce structurally
    identical automata (same indices, same edge sets).
    """
    if spec.kind == "split":
        return _gen_split()
    if spec.kind == "linear":
        return _gen_linear(spec.parameter)
    if spec.kind == "time":
        return _gen_time()
    if spec.kind == "counter":
        return _gen_counter(spec.parameter)
    if spec.kind == "doubleexp":
        return _gen_doubleexp(spec.parameter)
    if spec.kind == "nested":
        return _gen_nested(spec.parameter)
    if spec.kind == "memory-example":
        return _gen_memory_example()
    raise NfaError(f"unknown gadget kind {spec.kind!r}")


def _gen_split() -> Nfa:
    # One splitting step (delta) followed by a choice letter; the target
    # absorbs.  Complete as drawn, so no sink is added.
    edges = [
        ("q0", "a", "q0"),
        ("q0", "b", "q0"),
        ("q0", "delta", "q1"),
        ("q0", "delta", "q2"),
        ("q1", "a", "f"),
        ("q1", "b", "q0"),
        ("q1", "delta", "q1"),
        ("q2", "a", "q0"),
        ("q2", "b", "f"),
        ("q2", "delta", "q2"),
        ("f", "a", "f"),
        ("f", "b", "f"),
        ("f", "delta", "f"),
    ]
    return build_nfa(["q0", "q1", "q2", "f"], ["a", "b", "delta"], "q0", "f", edges)


def _gen_linear(c: int) -> Nfa:
    # b scatters the population over q1..qc; playing a_i wins unless q_i is
    # occupied, in which case its agents fall into the materialized losing
    # sink.  b from q_i returns to q0; a_j with j != i goes to f.
    states = ["q0"] + [f"q{i}" for i in range(1, c + 1)] + ["f", "frown"]
    alphabet = [f"a{i}" for i in range(1, c + 1)] + ["b"]
    edges = []
    for i in range(1, c + 1):
        edges.append(("q0", "b", f"q{i}"))
        edges.append((f"q{i}", "b", "q0"))
        for j in range(1, c + 1):
            edges.append((f"q{i}", f"a{j}", "f" if j != i else "frown"))
        edges.append(("q0", f"a{i}", "frown"))
    for letter in alphabet:
        edges.append(("f", letter, "f"))
        edges.append(("frown", letter, "frown"))
    return build_nfa(states, alphabet, "q0", "f", edges)


def _gen_time() -> Nfa:
    # Declaration order puts qtop before qbot so that the one-off adversary
    # convention sends the odd agent to qbot.  The retry letter is part of
    # the published alphabet but useful nowhere; it falls into _sink.
    states = ["q0", "qtop", "qbot", "k", "f"]
    alphabet = ["try", "retry", "top", "bot", "keep", "restart"]
    edges = [
        ("q0", "try", "qtop"),
        ("q0", "try", "qbot"),
        ("qtop", "keep", "q0"),
        ("qtop", "top", "f"),
        ("qbot", "keep", "k"),
        ("qbot", "bot", "f"),
        ("k", "restart", "q0"),
    ]
    for letter in alphabet:
        if letter != "restart":
            edges.append(("k", letter, "k"))
        edges.append(("f", letter, "f"))
    return build_nfa(states, alphabet, "q0", "f", edges)


def _gen_counter(n: int) -> Nfa:
    # n-bit binary counter.  Level i holds one of l_i (bit clear) and h_i
    # (bit set); action a_i sets bit i and resets all lower levels.  Any
    # off-discipline action drops an agent into frown.  The spread from q0
    # is the only nondeterministic step.
    states = (
        ["q0"]
        + [f"l{i}" for i in range(1, n + 1)]
        + [f"h{i}" for i in range(1, n + 1)]
        + ["frown"]
    )
    alphabet = [f"a{i}" for i in range(1, n + 1)]
    edges = []
    for j in range(1, n + 1):
        for i in range(1, n + 1):
            edges.append(("q0", f"a{j}", f"l{i}"))
        edges.append(("frown", f"a{j}", "frown"))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if j == i:
                edges.append((f"l{i}", f"a{j}", f"h{i}"))
                edges.append((f"h{i}", f"a{j}", "frown"))
            elif j > i:
                edges.append((f"l{i}", f"a{j}", "frown"))
                edges.append((f"h{i}", f"a{j}", f"l{i}"))
            else:
                edges.append((f"l{i}", f"a{j}", f"l{i}"))
                edges.append((f"h{i}", f"a{j}", f"h{i}"))
    # The counter gadget has no synchronization target of its own; q0 is
    # exposed as a placeholder so the type is satisfied.
    return build_nfa(states, alphabet, "q0", "q0", edges)


def _gen_doubleexp(n: int) -> Nfa:
    """Splitting gadget running against a countdown timer.

    The init action lets the adversary divide agents between the splitting
    gadget and a timer.  Every composite letter advances the timer: a chain
    of 2^n + 3 states feeding an n-bit counter, for 2^(n+1) + 2 survivable
    steps in total.  The star action sends live timer states and the split
    target to the global target "smile" and everything else to "frown",
    so the controller must finish the split before the timer dies.  The
    family's cut-off is exactly 2^(2^n + 1) + n.
    """
    chain_len = (1 << n) + 3
    states = (
        ["q0", "s0", "s1", "s2", "f"]
        + [f"c{i}" for i in range(1, chain_len + 1)]
        + [f"l{i}" for i in range(1, n + 1)]
        + [f"h{i}" for i in range(1, n + 1)]
        + ["smile", "frown"]
    )
    pairs = [(x, i) for x in ("a", "b", "d") for i in range(1, n + 1)]
    alphabet = ["init"] + [f"{x}.a{i}" for x, i in pairs] + ["star"]

    edges = [("q0", "init", "s0"), ("q0", "init", "c1")]
    split_moves = {
        "a": [("s0", "s0"), ("s1", "f"), ("s2", "s0"), ("f", "f")],
        "b": [("s0", "s0"), ("s1", "s0"), ("s2", "f"), ("f", "f")],
        "d": [("s0", "s1"), ("s0", "s2"), ("s1", "s1"), ("s2", "s2"), ("f", "f")],
    }
    for x, i in pairs:
        letter = f"{x}.a{i}"
        for src, dst in split_moves[x]:
            edges.append((src, letter, dst))
        for pos in range(1, chain_len):
            edges.append((f"c{pos}", letter, f"c{pos + 1}"))
        for lvl in range(1, n + 1):
            edges.append((f"c{chain_len}", letter, f"l{lvl}"))
            if i == lvl:
                edges.append((f"l{lvl}", letter, f"h{lvl}"))
                edges.append((f"h{lvl}", letter, "frown"))
            elif i > lvl:
                edges.append((f"l{lvl}", letter, "frown"))
                edges.append((f"h{lvl}", letter, f"l{lvl}"))
            else:
                edges.append((f"l{lvl}", letter, f"l{lvl}"))
                edges.append((f"h{lvl}", letter, f"h{lvl}"))
    edges.append(("f", "star", "smile"))
    for pos in range(1, chain_len + 1):
        edges.append((f"c{pos}", "star", "smile"))
    for lvl in range(1, n + 1):
        edges.append((f"l{lvl}", "star", "smile"))
        edges.append((f"h{lvl}", "star", "smile"))
    for letter in alphabet:
        edges.append(("smile", letter, "smile"))
        edges.append(("frown", letter, "frown"))
    # Everything unspecified (init replayed, star from split interior, ...)
    # is a losing move; route it to frown explicitly to stay complete.
    state_set = set(states)
    act_list = alphabet
    specified = {(s, a) for s, a, _ in edges}
    for s in state_set:
        for a in act_list:
            if (s, a) not in specified:
                edges.append((s, a, "frown"))
    return build_nfa(states, alphabet, "q0", "smile", edges)


def _gen_nested(layers: int) -> Nfa:
    """Layered try/keep tower; each extra layer squares the sync time.

    Layer 1 is the innermost gadget.  For i >= 2 the try edge toward the
    top state is replaced by the whole layer-(i-1) gadget, whose exits
    (top/bot) feed layer i's top state.  Playing a letter of an outer
    layer while agents sit in an inner gadget is losing.
    """
    if layers < 1:
        raise NfaError("nested needs at least one layer")
    states = []
    for i in range(1, layers + 1):
        states += [f"q0_{i}", f"qtop_{i}", f"qbot_{i}", f"k_{i}"]
    states += ["f", "frown"]
    alphabet = []
    for i in range(1, layers + 1):
        alphabet += [f"try{i}", f"keep{i}", f"top{i}", f"bot{i}", f"restart{i}"]

    edges = []
    for i in range(1, layers + 1):
        exit_state = "f" if i == layers else f"qtop_{i + 1}"
        inner_entry = f"qtop_{i}" if i == 1 else f"q0_{i - 1}"
        edges.append((f"q0_{i}", f"try{i}", inner_entry))
        edges.append((f"q0_{i}", f"try{i}", f"qbot_{i}"))
        edges.append((f"qtop_{i}", f"keep{i}", f"q0_{i}"))
        edges.append((f"qtop_{i}", f"top{i}", exit_state))
        edges.append((f"qbot_{i}", f"keep{i}", f"k_{i}"))
        edges.append((f"qbot_{i}", f"bot{i}", exit_state))
        edges.append((f"k_{i}", f"restart{i}", f"q0_{i}"))
        for letter in alphabet:
            if letter != f"restart{i}":
                edges.append((f"k_{i}", letter, f"k_{i}"))
        # Inner-layer letters idle this layer's top/bot states.
        for j in range(1, i):
            for kind in ("try", "keep", "top", "bot", "restart"):
                edges.append((f"qtop_{i}", f"{kind}{j}", f"qtop_{i}"))
                edges.append((f"qbot_{i}", f"{kind}{j}", f"qbot_{i}"))
    for letter in alphabet:
        edges.append(("f", letter, "f"))
        edges.append(("frown", letter, "frown"))
    specified = {(s, a) for s, a, _ in edges}
    for s in states:
        for a in alphabet:
            if (s, a) not in specified:
                edges.append((s, a, "frown"))
    return build_nfa(states, alphabet, f"q0_{layers}", "f", edges)


def _gen_memory_example() -> Nfa:
    # Winning requires reaching a support without q2 before playing c,
    # which no positional support-level strategy achieves.
    edges = [
        ("q0", "c", "q1"),
        ("q0", "c", "q2"),
        ("q0", "c", "q3"),
        ("q0", "c", "q4"),
        ("q1", "a", "q2"),
        ("q2", "a", "q1"),
        ("q3", "a", "q4"),
        ("q4", "a", "q3"),
        ("q1", "b", "q1"),
        ("q2", "b", "q3"),
        ("q3", "b", "q2"),
        ("q3", "b", "q4"),
        ("q4", "b", "q3"),
        ("q1", "c", "f"),
        ("q3", "c", "f"),
        ("q4", "c", "f"),
        ("f", "a", "f"),
        ("f", "b", "f"),
        ("f", "c", "f"),
    ]
    return build_nfa(["q0", "q1", "q2", "q3", "q4", "f"], ["a", "b", "c"], "q0", "f", edges)
