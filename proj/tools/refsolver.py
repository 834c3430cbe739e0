#!/usr/bin/env python3
"""Reference SMT-LIB2 (QF_BV subset) backend: reads a script on stdin,
answers sat/unsat plus a model on stdout.

This is an enumerating reference oracle for desk-scale cross-validation of
emitted queries, exercising the exact solver subprocess protocol a
production solver (z3/cvc5) would use. It supports the operator subset the
tool emits: Bool/BitVec declarations, define-fun chains, and/or/not/xor/
=/ite/distinct, bvadd/bvsub/bvurem/bvult, extract, #b/#x literals.
"""

import sys


def tokenize(text):
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c.isspace():
            i += 1
        elif c in "()":
            out.append(c)
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            out.append(text[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def parse(tokens):
    pos = 0

    def expr():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while tokens[pos] != ")":
                items.append(expr())
            pos += 1
            return items
        return tok

    forms = []
    while pos < len(tokens):
        forms.append(expr())
    return forms


class Solver:
    def __init__(self):
        self.decls = []  # (name, sort) with sort None for Bool or width int
        self.defines = []  # (name, compiled body)
        self.asserts = []
        self.assert_deps = []  # symbol sets, parallel to asserts
        self.widths = {}

    @staticmethod
    def symbols(e, out):
        if isinstance(e, str):
            if not e.startswith("#") and e not in ("true", "false", "_"):
                out.add(e)
        else:
            for sub in e:
                Solver.symbols(sub, out)

    # Compile an expression to a closure over the per-assignment env dict.
    def compile(self, e):
        if isinstance(e, str):
            if e == "true":
                return lambda env: True
            if e == "false":
                return lambda env: False
            if e.startswith("#b"):
                v = int(e[2:], 2) if len(e) > 2 else 0
                return lambda env: v
            if e.startswith("#x"):
                v = int(e[2:], 16)
                return lambda env: v
            name = e
            return lambda env: env[name]
        head = e[0]
        if isinstance(head, list):  # ((_ extract i j) arg)
            if head[0] == "_" and head[1] == "extract":
                hi, lo = int(head[2]), int(head[3])
                arg = self.compile(e[1])
                mask = (1 << (hi - lo + 1)) - 1
                return lambda env: (arg(env) >> lo) & mask
            raise ValueError(f"unsupported head {head}")
        if head == "_":  # (_ bvN w)
            v = int(e[1][2:])
            return lambda env: v
        args = [self.compile(a) for a in e[1:]]
        if head == "not":
            a = args[0]
            return lambda env: not a(env)
        if head == "and":
            return lambda env: all(a(env) for a in args)
        if head == "or":
            return lambda env: any(a(env) for a in args)
        if head == "xor":
            return lambda env: bool(args[0](env)) != bool(args[1](env))
        if head == "=":
            a, b = args
            return lambda env: a(env) == b(env)
        if head == "distinct":
            a, b = args
            return lambda env: a(env) != b(env)
        if head == "ite":
            s, a, b = args
            return lambda env: a(env) if s(env) else b(env)
        if head == "bvadd":
            a, b = args
            w = self.width_of(e[1])
            m = (1 << w) - 1
            return lambda env: (a(env) + b(env)) & m
        if head == "bvsub":
            a, b = args
            w = self.width_of(e[1])
            m = (1 << w) - 1
            return lambda env: (a(env) - b(env)) & m
        if head == "bvurem":
            a, b = args
            return lambda env: a(env) % b(env) if b(env) != 0 else a(env)
        if head == "bvult":
            a, b = args
            return lambda env: a(env) < b(env)
        raise ValueError(f"unsupported operator {head}")

    def width_of(self, e):
        if isinstance(e, str):
            if e.startswith("#b"):
                return len(e) - 2
            if e in self.widths:
                return self.widths[e]
            return 64
        if e[0] == "_":
            return int(e[2])
        if isinstance(e[0], list) and e[0][0] == "_" and e[0][1] == "extract":
            return int(e[0][2]) - int(e[0][3]) + 1
        return self.width_of(e[1])

    def feed(self, form):
        head = form[0]
        if head == "declare-fun":
            name, sort = form[1], form[3]
            if sort == "Bool":
                self.decls.append((name, None))
            else:  # (_ BitVec w)
                w = int(sort[2])
                self.decls.append((name, w))
                self.widths[name] = w
        elif head == "define-fun":
            name, sort, body = form[1], form[3], form[4]
            if isinstance(sort, list):
                self.widths[name] = int(sort[2])
            self.defines.append((name, self.compile(body)))
        elif head == "assert":
            deps = set()
            Solver.symbols(form[1], deps)
            self.asserts.append(self.compile(form[1]))
            self.assert_deps.append(deps)

    def solve(self):
        env = {}
        define_names = {name for name, _ in self.defines}
        cheap = [a for a, d in zip(self.asserts, self.assert_deps) if not (d & define_names)]
        rest = [a for a, d in zip(self.asserts, self.assert_deps) if d & define_names]

        def run(idx):
            if idx == len(self.decls):
                # Range constraints first: skip the define chain on pruned
                # assignments.
                if not all(a(env) for a in cheap):
                    return False
                for name, fn in self.defines:
                    env[name] = fn(env)
                return all(a(env) for a in rest)
            name, width = self.decls[idx]
            domain = (False, True) if width is None else range(1 << width)
            for v in domain:
                env[name] = v
                if run(idx + 1):
                    return True
            return False

        # Recursion depth equals declaration count; keep iterative-ish by
        # raising the limit for wide queries.
        sys.setrecursionlimit(10000 + 10 * len(self.decls))
        if run(0):
            return env
        return None

    def model_text(self, env):
        lines = ["("]
        for name, width in self.decls:
            if width is None:
                lines.append(f"  (define-fun {name} () Bool {'true' if env[name] else 'false'})")
            else:
                lines.append(
                    f"  (define-fun {name} () (_ BitVec {width}) #b{env[name]:0{width}b})"
                )
        lines.append(")")
        return "\n".join(lines)


def main():
    text = sys.stdin.read()
    forms = parse(tokenize(text))
    solver = Solver()
    check_requested = False
    model_requested = False
    for form in forms:
        if not isinstance(form, list) or not form:
            continue
        if form[0] == "check-sat":
            check_requested = True
        elif form[0] == "get-model":
            model_requested = True
        elif form[0] in ("set-logic", "set-info", "set-option", "exit"):
            continue
        else:
            solver.feed(form)
    if not check_requested:
        return 0
    env = solver.solve()
    if env is None:
        print("unsat")
    else:
        print("sat")
        if model_requested:
            print(solver.model_text(env))
    return 0


if __name__ == "__main__":
    sys.exit(main())
