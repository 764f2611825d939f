"""Train a small GSimCNN on a synthetic corpus and rank a database for one query.

Labels are exact GEDs from A*; training is short, so expect a rough model.
Run: python3 demos/02_train_and_rank.py
"""
import tempfile
from pathlib import Path

import numpy as np

from graphsim.dataset import LabelCache, generate_synthetic, label_pairs, split_corpus, training_pairs
from graphsim.evaluate import constant_scorer, model_scorer, run_eval
from graphsim.ged import astar_ged
from graphsim.model import GSimCNN, ModelConfig, TrainConfig, train

corpus = generate_synthetic(60, 7, 3, seed=3)
split = split_corpus(corpus, seed=3)
print(f"{len(split.train)} train / {len(split.val)} val / {len(split.test)} test graphs")

with tempfile.TemporaryDirectory() as tmp:
    cache_path = Path(tmp) / "labels.jsonl"
    labeled = label_pairs(split, corpus, astar_ged, cache_path)
    labels = LabelCache(cache_path)
print(f"{len(labeled)} labeled pairs")

model = GSimCNN(ModelConfig.for_corpus(corpus, seed=0))
result = train(model, corpus, split, labels, TrainConfig(iterations=300, batch_size=64, eval_every=50))
for row in result.history:
    print(f"  iteration {row['iteration']:>4}  train {row['train_loss']:.4f}  val {row['val_loss']:.4f}")
print(f"best validation loss {result.best_val_loss:.4f} at iteration {result.best_iteration}")

mean_sim = float(np.mean([lp.sim for lp in labels.labeled(corpus, training_pairs(split))]))
for name, scorer in [("constant", constant_scorer(mean_sim)), ("gsimcnn", model_scorer(model))]:
    report, rankings = run_eval(corpus, split, scorer, labels, name)
    tau = "n/a" if report.tau is None else f"{report.tau:.3f}"
    print(f"{name:>9}: mse {report.mse_e3:.2f}e-3  tau {tau}  p@10 {report.p_at_k[10]:.3f}")

# The top of one query's ranking: predicted against true similarity.
first = rankings[0]
print(f"\nquery {first.query_id}: top 5 of {len(first.db_ids)}")
for db_id, pred, true in list(zip(first.db_ids, first.pred_sims, first.true_sims))[:5]:
    print(f"  {db_id}  predicted {pred:.3f}  true {true:.3f}")
