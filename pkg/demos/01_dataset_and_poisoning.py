"""Walk through the data pipeline: a synthetic IDX corpus, i.i.d. shards,
the backdoor trigger, shard poisoning, and the two evaluation sets.

Run:  python demos/01_dataset_and_poisoning.py
"""

import numpy as np

from gossipsim.data import (DEFAULT_TRIGGER, apply_trigger, build_eval_sets,
                            load_data_dir, poison_shard, shard_iid)
from gossipsim.synthdata import ensure_corpus

from _common import ascii_image, corpus_dir

# -- 1. a deterministic digit corpus in canonical IDX files ---------------

data_dir = ensure_corpus(corpus_dir())
training, test = load_data_dir(data_dir)
print(f"training: {len(training)} samples, test: {len(test)} samples")
print(f"class counts (training): {training.class_counts().tolist()}")

# -- 2. what a sample and a trigger-stamped copy look like ----------------

sample = training.sample(7)
marked = apply_trigger(sample)
print(f"\nsample #7, label {sample.label}:")
print(ascii_image(sample.pixels))
print(f"same image with the 9-pixel trigger (label untouched):")
print(ascii_image(marked.pixels))
changed = int(np.sum(marked.pixels != sample.pixels))
print(f"pixels changed: {changed} (at most 9; fewer when strokes already "
      f"cover trigger positions)")

# -- 3. disjoint i.i.d. shards --------------------------------------------

rng = np.random.default_rng(1)
assignment = shard_iid(training, n=100, shard_size=250, rng=rng)
flat = np.concatenate(assignment.shards)
print(f"\n100 shards x 250 samples, all distinct: "
      f"{len(np.unique(flat)) == 25000}")
shard0 = training.subset(assignment.shards[0], "local-shard")
print(f"shard 0 class counts: {shard0.class_counts().tolist()}")

# -- 4. poisoning a Byzantine shard ---------------------------------------

poisoned = poison_shard(shard0, fraction=0.2, target_label=0, rng=rng)
relabeled = int((poisoned.labels != shard0.labels).sum())
zeros = int((poisoned.labels == 0).sum())
print(f"\nafter poisoning 20%: {zeros} samples carry label 0 "
      f"({relabeled} were relabeled)")
cols = list(DEFAULT_TRIGGER.flat_indices)
stamped = int((poisoned.pixels[:, cols] == 1.0).all(axis=1).sum())
print(f"samples carrying the full trigger: {stamped}")

# -- 5. evaluation sets ----------------------------------------------------

clean_eval, backdoor_eval = build_eval_sets(test, np.random.default_rng(2))
print(f"\nclean eval: {len(clean_eval)} samples (labels preserved)")
print(f"backdoor eval: {len(backdoor_eval)} samples "
      f"(original zeros removed, trigger stamped, reference label 0)")
print("accuracy on the backdoor set therefore reads as attack success: "
      "lower is better for honest nodes")
