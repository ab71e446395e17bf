"""pubscreen: bibliometric screening of institutional authorship patterns.

Pipeline modules: ingest (record files -> Corpus), indicators (per-institution
metrics and rankings), authorship (author-level detectors), network
(co-authorship graphs), screening (selection funnel and group comparison),
synth (synthetic corpora with planted ground truth), oracle (independent
full-scan recomputation), refdata (bundled published reference values).
"""

__version__ = "0.1.0"
