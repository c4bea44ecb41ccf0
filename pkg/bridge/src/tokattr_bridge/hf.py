"""Transformers sequence-classification backend for the worker.

The model reference is anything ``AutoModelForSequenceClassification``
accepts (a local checkpoint directory or a hub id). Classes come from the
checkpoint's ``id2label`` in index order; predictions are softmax
probabilities, computed in eval mode with gradients off.
"""

from __future__ import annotations

from typing import Sequence


class HfClassifier:
    def __init__(self, model_ref: str, max_length: int = 256):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_ref)
        self.model = AutoModelForSequenceClassification.from_pretrained(model_ref)
        self.model.eval()
        self.max_length = max_length

        id2label = self.model.config.id2label
        self.classes = [id2label[i] for i in range(len(id2label))]
        self.output_mode = "probability"
        self.model_name = str(model_ref)

    def predict(self, texts: Sequence[str]) -> list[list[float]]:
        torch = self._torch
        encoded = self.tokenizer(
            list(texts),
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )
        with torch.no_grad():
            logits = self.model(**encoded).logits
            probs = torch.softmax(logits, dim=-1)
        return [[float(p) for p in row] for row in probs]
