import json
import threading
import urllib.error
import urllib.request

import pytest

from lexswap.annotation import (
    AnnotationTask,
    LabelStore,
    ServiceState,
    cohen_kappa,
    make_server,
)


def make_tasks():
    stage1 = [
        AnnotationTask(task_id=f"s1-{i:04d}", stage=1, shown_text=f"جملة {i}",
                       gold_origin="human" if i % 2 else "machine")
        for i in range(4)
    ]
    stage2 = [
        AnnotationTask(task_id=f"s2-{i:04d}", stage=2, shown_text=f"مزيف {i}",
                       gold_origin="machine", pair_original=f"اصل {i}",
                       pos_of_manipulation="N_PROP" if i % 2 else "ADJ")
        for i in range(3)
    ]
    return stage1 + stage2


@pytest.fixture
def service(tmp_path):
    tasks = make_tasks()
    store = LabelStore(tmp_path / "labels.jsonl", tasks)
    ui_dir = tmp_path / "ui"
    ui_dir.mkdir()
    (ui_dir / "index.html").write_text("<html>annotate</html>", encoding="utf-8")
    state = ServiceState(tasks, store, pair=("annoA", "annoB"), ui_dir=ui_dir)
    server = make_server(state, "127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    try:
        yield base, store
    finally:
        server.shutdown()
        server.server_close()


def get(base, path):
    with urllib.request.urlopen(base + path) as resp:
        return resp.status, json.loads(resp.read().decode("utf-8"))


def post(base, path, payload):
    data = json.dumps(payload).encode("utf-8")
    req = urllib.request.Request(
        base + path, data=data, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read().decode("utf-8"))
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read().decode("utf-8"))


def label(base, task_id, annotator, stage, value):
    return post(base, "/api/labels", {
        "task_id": task_id, "annotator_id": annotator,
        "stage": stage, "value": value})


def test_next_task_payload_schema(service):
    base, _ = service
    status, payload = get(base, "/api/tasks/next?annotator=annoA&stage=1")
    assert status == 200
    assert set(payload) == {"task_id", "stage", "shown_text"}
    status, payload = get(base, "/api/tasks/next?annotator=annoA&stage=2")
    assert set(payload) == {"task_id", "stage", "shown_text", "pair_original"}
    assert "gold_origin" not in json.dumps(payload)


def test_label_flow_until_done(service):
    base, store = service
    seen = []
    while True:
        _, payload = get(base, "/api/tasks/next?annotator=annoA&stage=1")
        if payload.get("status") == "done":
            break
        seen.append(payload["task_id"])
        status, ack = label(base, payload["task_id"], "annoA", 1, "machine")
        assert status == 200 and ack["status"] == "stored"
    assert len(seen) == 4 and len(set(seen)) == 4
    assert len([l for l in store.labels() if l.stage == 1]) == 4


def test_bad_domain_is_rejected(service):
    base, _ = service
    status, body = label(base, "s1-0000", "annoA", 1, "fake")
    assert status == 400 and "error" in body


def test_unknown_task_and_malformed_json(service):
    base, _ = service
    status, body = label(base, "missing", "annoA", 1, "human")
    assert status == 400 and "error" in body
    req = urllib.request.Request(
        base + "/api/labels", data=b"{not json",
        headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            status = resp.status
    except urllib.error.HTTPError as err:
        status = err.code
        body = json.loads(err.read().decode("utf-8"))
    assert status == 400 and "error" in body


def test_agreement_insufficient_then_computed(service):
    base, _ = service
    _, payload = get(base, "/api/agreement")
    assert payload["stage1"] == {"status": "insufficient data"}

    values_a = ["human", "human", "machine", "machine"]
    values_b = ["human", "machine", "machine", "machine"]
    for i, (va, vb) in enumerate(zip(values_a, values_b)):
        label(base, f"s1-{i:04d}", "annoA", 1, va)
        label(base, f"s1-{i:04d}", "annoB", 1, vb)
    _, payload = get(base, "/api/agreement")
    assert payload["annotators"] == ["annoA", "annoB"]
    assert payload["stage1"]["kappa"] == pytest.approx(
        cohen_kappa(values_a, values_b))
    assert payload["stage1"]["n"] == 4


def test_veracity_stats_endpoint(service):
    base, _ = service
    label(base, "s2-0000", "annoA", 2, "fake")
    label(base, "s2-0001", "annoA", 2, "fake")
    label(base, "s2-0002", "annoA", 2, "true")
    _, payload = get(base, "/api/veracity_stats")
    assert payload["by_pos"]["N_PROP"] == {"fake_fraction": 1.0, "labels": 1}
    assert payload["by_pos"]["ADJ"]["labels"] == 2
    assert payload["by_pos"]["ADJ"]["fake_fraction"] == pytest.approx(0.5)


def test_progress_counts(service):
    base, _ = service
    label(base, "s1-0000", "annoA", 1, "human")
    label(base, "s2-0000", "annoB", 2, "fake")
    _, payload = get(base, "/api/progress")
    assert payload["stage1"]["total"] == 4
    assert payload["stage1"]["by_annotator"] == {"annoA": 1}
    assert payload["stage2"]["by_annotator"] == {"annoB": 1}


def test_static_ui_and_traversal_guard(service):
    base, _ = service
    with urllib.request.urlopen(base + "/") as resp:
        assert b"annotate" in resp.read()
    try:
        with urllib.request.urlopen(base + "/../labels.jsonl") as resp:
            status = resp.status
    except urllib.error.HTTPError as err:
        status = err.code
    assert status == 404


def test_unknown_api_route(service):
    base, _ = service
    try:
        urllib.request.urlopen(base + "/api/nope")
        raise AssertionError("expected 404")
    except urllib.error.HTTPError as err:
        assert err.code == 404
