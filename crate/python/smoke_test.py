"""Smoke test for the gustl extension module.

Build and install it first:
    pip install --no-build-isolation -e crates/python
Then run with pytest or directly with python.
"""

from pathlib import Path

import gustl

PROGRAMS = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "programs"


def load(*names):
    return {n: gustl.compile((PROGRAMS / f"{n}.gs").read_text()) for n in names}


def test_header():
    img = gustl.compile("process p(c) start stop")
    data = img.encode()
    assert data[:4] == bytes([0xCF, 0x80, 0xCF, 0x85])
    assert img.header()[:4] == [0x85CF80CF, 0, 0, 0]
    assert gustl.Image.decode(data) == img
    assert "entry:" in img.disassemble()


def test_affine_size():
    img = gustl.compile(b"process p(c, dimension) word buf[2*dimension+3], x, y start stop")
    assert (img.d1, img.d0) == (2, 5)
    assert img.data_size(4) == 13


def test_diagnostics():
    diags = gustl.check("process p(c) start c ! y stop")
    assert [d.code for d in diags] == ["E-UNDECLARED"]
    assert (diags[0].line, diags[0].column) == (1, 24)
    try:
        gustl.compile("")
    except gustl.CompileError as e:
        assert e.args[1][0].code == "E-PARSE"
    else:
        raise AssertionError("empty source accepted")


def test_euclid():
    for n in range(-50, 51):
        for d in [v for v in range(-7, 8) if v != 0]:
            q, r = gustl.div_euclid(n, d), gustl.mod_euclid(n, d)
            assert n == d * q + r and 0 <= r < abs(d)
    try:
        gustl.div_euclid(1, 0)
    except ZeroDivisionError:
        pass
    else:
        raise AssertionError("division by zero accepted")


def test_ping_pong():
    report = gustl.run(load("ping", "pong"), "ping", seed=42, trace=True)
    assert report.outcome == "Completed"
    assert report.exit_code == 0
    assert report.output == [110]
    assert report.conservation_holds()
    again = gustl.run(load("ping", "pong"), "ping", seed=42, trace=True)
    assert again.trace == report.trace


def test_exit_codes():
    assert gustl.run(load("mutual", "sleeper"), "mutual").exit_code == 3
    assert gustl.run(load("divzero"), "divzero").exit_code == 4
    assert gustl.run(load("timer"), "timer", max_steps=20).exit_code == 5
    assert gustl.run({}, "nothing").exit_code == 2


def test_opcodes():
    table = gustl.opcodes()
    assert table[0][0] == 1
    assert len({name for _, name, _ in table}) == len(table)


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)
