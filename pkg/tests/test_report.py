import json
import math

from sdspace.report import Report, ReportEntry, dumps


def test_dumps_is_canonical():
    assert dumps({"b": 1.0, "a": [math.inf, -math.inf, math.nan]}) == '{"a":["inf","-inf","nan"],"b":1.0}'
    assert dumps(1 + 2j) == '{"im":2.0,"re":1.0}'


def test_report_lines_sorted_and_summarized():
    r = Report({"seed": 1})
    r.extend([ReportEntry("zeta", {"i": 1}, 1.0, 2.0, 1.0, True),
              ReportEntry("alpha", {"i": 2}, 3.0, 2.0, -1.0, False, "note")])
    lines = [json.loads(x) for x in r.lines()]
    assert lines[0]["kind"] == "header" and lines[0]["config"] == {"seed": 1}
    assert [x["check"] for x in lines[1:3]] == ["alpha", "zeta"]
    assert lines[1]["verdict"] == "fail" and lines[1]["note"] == "note"
    assert lines[-1] == {"kind": "summary", "passed": 1, "failed": 1}
    assert r.text().endswith("\n") and r.passed == 1 and r.failed == 1


def test_report_is_order_independent():
    es = [ReportEntry("c", {"i": i}, float(i), 0.0, -float(i), i % 2 == 0) for i in range(10)]
    a, b = Report({}), Report({})
    a.extend(es)
    b.extend(reversed(es))
    assert a.text() == b.text()
