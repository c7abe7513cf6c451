import json
import os
import sys
import tempfile

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialectdecomp.harness import (
    ConfigError,
    FileMessageMatrix,
    FormatError,
    HarnessConfig,
    MessageRule,
    ParserSpec,
    aggregate_counts,
    dumps_counts,
    invert_frequent_messages,
    invert_messages,
    load_config,
    load_matrix,
    loads_counts,
    matrix_from_patterns,
    run_harness,
    save_matrix,
)
from dialectdecomp.model import load_spec, sample_corpus
from dialectdecomp.poset import MessagePattern, MessageUniverse

from conftest import fixture_path

PARSERS = fixture_path("parsers")


def stub(name):
    return f"{sys.executable} {os.path.join(PARSERS, name)} {{file}}"


def stub_config(hang_timeout=1.0):
    return HarnessConfig(
        parsers=(
            ParserSpec("strict", stub("strict_csv.py")),
            ParserSpec("enc", stub("encoding.py")),
            ParserSpec("hang", stub("hang.py"), timeout=hang_timeout),
        ),
        message_rules=(
            MessageRule("strict", "parse-error", "regex-on-output", r"^Parse error"),
            MessageRule("strict", "strict-exit", "exit-code-nonzero"),
            MessageRule("strict", "semicolon", "regex-on-output", "semicolon"),
            MessageRule("enc", "ascii", "regex-on-output", r"^encoding: ASCII$"),
            MessageRule("enc", "utf8", "regex-on-output", r"^encoding: UTF-8$"),
            MessageRule("hang", "hang-exit", "exit-code-nonzero"),
            MessageRule("hang", "hang-started", "regex-on-output", r"^started$"),
        ),
    )


CORPUS = {
    "f1.csv": ("a,b\n1,2\n", ["ascii", "hang-started"]),
    "f2.csv": ("a;b\n1;2\n", ["semicolon", "ascii", "hang-started"]),
    "f3.csv": ("BAD\n", ["parse-error", "strict-exit", "ascii", "hang-started"]),
    "f4.csv": ("é,x\n", ["utf8", "hang-started"]),
    "f5.csv": ("HANG\n", ["ascii", "hang-exit", "hang-started"]),
}


@pytest.fixture
def corpus(tmp_path):
    paths = []
    for name, (text, _) in CORPUS.items():
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        paths.append(str(p))
    return paths


def expected_matrix(config, paths):
    u = config.universe
    return FileMessageMatrix(
        u, tuple((p, u.pattern(CORPUS[os.path.basename(p)][1])) for p in paths)
    )


def test_stub_parsers_bit_for_bit(corpus):
    config = stub_config()
    m = run_harness(config, corpus, workers=3)
    assert m == expected_matrix(config, corpus)
    assert m.provenance["config_digest"] == config.digest()
    assert "timestamp" in m.provenance


def test_harness_is_deterministic(corpus):
    config = stub_config()
    assert run_harness(config, corpus, workers=1) == run_harness(config, corpus, workers=4)


def test_empty_file_list():
    config = stub_config()
    m = run_harness(config, [])
    assert len(m) == 0
    assert m.universe.size == 7


def test_single_rule_echo(tmp_path):
    script = tmp_path / "echo.py"
    script.write_text("import sys\nif 'x' in open(sys.argv[1]).read():\n    print('Parse error')\n")
    cfg = HarnessConfig(
        (ParserSpec("p", f"{sys.executable} {script} {{file}}"),),
        (MessageRule("p", "err", "regex-on-output", "Parse error"),),
    )
    a, b = tmp_path / "a", tmp_path / "b"
    a.write_text("x")
    b.write_text("y")
    m = run_harness(cfg, [a, b])
    assert [p.bits for _, p in m.rows] == [1, 0]


def test_unresolvable_command_fails_before_running(tmp_path):
    target = tmp_path / "t"
    target.write_text("x")
    cfg = HarnessConfig(
        (
            ParserSpec("touch", stub("touch.py")),
            ParserSpec("ghost", "no-such-parser-binary-here {file}"),
        ),
        (
            MessageRule("touch", "t", "exit-code-nonzero"),
            MessageRule("ghost", "g", "exit-code-nonzero"),
        ),
    )
    with pytest.raises(ConfigError, match="not found"):
        run_harness(cfg, [target])
    assert not os.path.exists(str(target) + ".ran")


def test_config_validation():
    with pytest.raises(ConfigError, match="exactly once"):
        HarnessConfig((ParserSpec("p", "cat"),), ())
    with pytest.raises(ConfigError, match="exactly once"):
        HarnessConfig((ParserSpec("p", "cat {file} {file}"),), ())
    with pytest.raises(ConfigError, match="duplicate"):
        HarnessConfig(
            (ParserSpec("p", "cat {file}"),),
            (MessageRule("p", "m", "exit-code-nonzero"), MessageRule("p", "m", "exit-code-nonzero")),
        )
    with pytest.raises(ConfigError, match="unknown parser"):
        HarnessConfig((ParserSpec("p", "cat {file}"),), (MessageRule("q", "m", "exit-code-nonzero"),))
    with pytest.raises(ConfigError, match="rule kind"):
        MessageRule("p", "m", "stdout-contains")


def test_config_json_roundtrip(tmp_path):
    cfg = stub_config()
    path = tmp_path / "cfg.json"
    obj = cfg.to_json()
    del obj["inversion_threshold"]
    for p in obj["parsers"]:
        del p["timeout"]
    path.write_text(json.dumps(obj))
    back = load_config(path)
    assert back.inversion_threshold == 0.5
    assert all(p.timeout == 30.0 for p in back.parsers)


# -- inversion ---------------------------------------------------------------

def matrix(names, rows):
    u = MessageUniverse(tuple(names))
    return matrix_from_patterns(u, [u.pattern(r) for r in rows])


def test_always_present_message_is_inverted():
    m = matrix(["x", "y"], [["x"], ["x", "y"], ["x"]])
    out, log = invert_frequent_messages(m, 0.5)
    assert log == ["x"]
    assert out.universe.names == ("absence-of-x", "y")
    assert out.frequencies()["absence-of-x"] == 0


def test_nitf_like_fixture():
    m = load_matrix(fixture_path("nitf_like.json"))
    assert m.frequencies()["codice parse error"] == 0.6
    out, log = invert_frequent_messages(m, 0.5)
    assert log == ["codice parse error"]
    assert out.frequencies()["absence-of-codice parse error"] == pytest.approx(0.4)
    assert out.frequencies()["nitro warning"] == 0.2


def test_nothing_to_invert():
    m = matrix(["x"], [["x"], []])
    out, log = invert_frequent_messages(m, 0.5)
    assert out is m and log == []


@st.composite
def matrices(draw):
    width = draw(st.integers(1, 5))
    rows = draw(st.lists(st.integers(0, 2**width - 1), min_size=1, max_size=30))
    u = MessageUniverse.anonymous(width)
    return matrix_from_patterns(u, [MessagePattern(b, width) for b in rows])


@given(matrices(), st.sampled_from([0.5, 0.3, 0.75, 1.0]))
@settings(max_examples=150)
def test_inversion_caps_frequencies(m, t):
    out, log = invert_frequent_messages(m, t)
    assert all(v <= max(t, 1 - t) for v in out.frequencies().values())
    if t == 0.5:
        assert all(v <= 0.5 for v in out.frequencies().values())
    back = invert_messages(out, ["absence-of-" + n for n in log])
    assert back == m


# -- aggregation -------------------------------------------------------------

def test_aggregate_identical_rows():
    p, f = aggregate_counts(matrix(["x"], [["x"]] * 3))
    assert len(p) == 1 and f.values == (3,)


def test_aggregate_chain():
    p, f = aggregate_counts(matrix(["m0", "m1", "m2"], [[], ["m1"], ["m1"], ["m1", "m2"]]))
    assert f.values == (1, 2, 1)
    assert sorted(p.hasse_edges) == [(0, 1), (1, 2)]


def test_aggregate_csv_scale():
    spec = load_spec(fixture_path("csv_like_spec.json"))
    pats, prov = sample_corpus(spec, 3005, 11)
    p, f = aggregate_counts(matrix_from_patterns(spec.universe, pats, prov))
    assert f.total == 3005


@given(matrices())
def test_aggregate_total_is_row_count(m):
    assert aggregate_counts(m)[1].total == len(m)


# -- formats -----------------------------------------------------------------

@given(matrices())
@settings(max_examples=50)
def test_dense_and_sparse_roundtrip(m):
    with tempfile.TemporaryDirectory() as d:
        for ext in ("csv", "json"):
            path = os.path.join(d, f"m.{ext}")
            save_matrix(m, path)
            assert load_matrix(path) == m


def test_dense_and_sparse_agree():
    assert load_matrix(fixture_path("nitf_like.csv")) == load_matrix(fixture_path("nitf_like.json"))


def test_unknown_column(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("file_id,a,zz\nf,0,1\n")
    with pytest.raises(FormatError, match="zz"):
        load_matrix(path, expected_messages=["a", "b"])


def test_parse_errors_name_line_and_column(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("file_id,a,b\nf,0,1\ng,2,0\n")
    with pytest.raises(FormatError, match=r"line 3, column 'a'"):
        load_matrix(path)
    path.write_text("id,a\n")
    with pytest.raises(FormatError, match="line 1"):
        load_matrix(path)
    path.write_text("file_id,a\nf,0,1\n")
    with pytest.raises(FormatError, match="line 2"):
        load_matrix(path)
    bad = tmp_path / "m.json"
    bad.write_text('{"messages": ["a"], "rows": [\n{"file": "f", "on": ["q"]}]}')
    with pytest.raises(FormatError, match="rows\\[0\\]"):
        load_matrix(bad)


def test_counts_roundtrip_keeps_zero_elements():
    m = matrix(["B", "C"], [["B"], ["B", "C"]])
    p, f = aggregate_counts(m)
    text = dumps_counts(p, f)
    p2, f2 = loads_counts(text)
    assert p2 == p and f2 == f
    p3, f3 = loads_counts('{"messages": ["B"], "patterns": [{"on": [], "count": 0}, {"on": ["B"], "count": 2}]}')
    assert f3.values == (0, 2)
    with pytest.raises(FormatError, match="nonnegative"):
        loads_counts('{"messages": ["B"], "patterns": [{"on": [], "count": -1}]}')
    with pytest.raises(FormatError, match="line 1 column"):
        loads_counts("{")
