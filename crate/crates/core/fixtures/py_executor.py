"""Reference executor speaking the JSON-lines protocol.

Each request line is {"source", "function_name", "input", "trace"}; each
response line is {"status", "output_repr", "covered_lines", "error",
"steps"}. `steps` counts executed bytecode instructions of program code.
"""

import io
import json
import sys

FILENAME = "<program>"

KNOWN = (
    ZeroDivisionError,
    IndexError,
    KeyError,
    RecursionError,
    TypeError,
    ValueError,
    NameError,
    AttributeError,
    OverflowError,
    MemoryError,
    AssertionError,
    TimeoutError,
)


def error_kind(exc):
    for cls in KNOWN:
        if isinstance(exc, cls):
            return cls.__name__
    return type(exc).__name__


def error_line(exc):
    tb = exc.__traceback__
    line = None
    while tb is not None:
        if tb.tb_frame.f_code.co_filename == FILENAME:
            line = tb.tb_lineno
        tb = tb.tb_next
    return line


def collect(*args, **kwargs):
    return args, kwargs


def run(req):
    covered = set()
    steps = [0]

    def response(status, output_repr=None, error=None):
        return {
            "status": status,
            "output_repr": output_repr,
            "covered_lines": sorted(covered),
            "error": error,
            "steps": steps[0],
        }

    def failure(exc, line=None):
        return response(
            "error",
            error={"kind": error_kind(exc), "message": str(exc), "line": line if line is not None else error_line(exc)},
        )

    try:
        code = compile(req["source"], FILENAME, "exec")
    except SyntaxError as exc:
        return response("error", error={"kind": "SyntaxError", "message": str(exc.msg), "line": exc.lineno})

    env = {"__name__": "__program__", "__collect__": collect}
    try:
        exec(code, env)
        fn = eval(req["function_name"], env)
        args, kwargs = eval("__collect__(" + req["input"] + ")", env)
    except Exception as exc:
        return failure(exc)

    trace = bool(req.get("trace", True))

    def tracer(frame, event, arg):
        if frame.f_code.co_filename != FILENAME:
            return None
        frame.f_trace_opcodes = True
        if event == "call":
            covered.add(frame.f_code.co_firstlineno)
        elif event == "line":
            if trace:
                covered.add(frame.f_lineno)
        elif event == "opcode":
            steps[0] += 1
        return tracer

    sys.settrace(tracer)
    try:
        result = fn(*args, **kwargs)
    except BaseException as exc:
        sys.settrace(None)
        if isinstance(exc, (KeyboardInterrupt, SystemExit)):
            raise
        return failure(exc)
    finally:
        sys.settrace(None)
    try:
        rendered = repr(result)
    except Exception as exc:
        return failure(exc)
    return response("ok", output_repr=rendered)


def main():
    out = sys.stdout
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
        except ValueError as exc:
            resp = {"status": "error", "output_repr": None, "covered_lines": [], "steps": 0,
                    "error": {"kind": "ProtocolError", "message": str(exc), "line": None}}
        else:
            sys.stdout = io.StringIO()
            try:
                resp = run(req)
            finally:
                sys.stdout = out
        out.write(json.dumps(resp) + "\n")
        out.flush()


if __name__ == "__main__":
    sys.setrecursionlimit(10000)
    main()
