"""Integration checks on the full-scale training runs shared via conftest.

Running this file alone triggers the session fixtures, so it costs one
training run per volume; in a full suite run the acceptance tests share
the same models.
"""
import math


def test_validation_loss_halves_from_baseline(compatible_run):
    histories = compatible_run.histories
    selected = compatible_run.model.selected_restart
    epochs = histories[selected].epochs
    assert epochs[0].epoch == 0
    assert epochs[-1].val_loss <= 0.5 * epochs[0].val_loss


def test_histories_span_all_restarts_and_epochs(compatible_run):
    config = compatible_run.model.config
    assert [h.restart for h in compatible_run.histories] == list(range(config.restarts))
    for h in compatible_run.histories:
        assert not h.diverged
        assert len(h.epochs) == config.epochs + 1
        assert all(math.isfinite(e.train_loss) for e in h.epochs)


def test_mirrored_run_completes_without_divergence(mirror_run):
    assert mirror_run.model.selected_restart is not None
    assert all(not h.diverged for h in mirror_run.histories)
