"""Tour of the evaluation metrics on hand-sized inputs.

Covers box/mask grounding scores, the text-overlap report metrics with the
pinned tokenizer, category-label F1 in both modes, and phrase-match
accuracy.
"""
from gazeforge import evalmetrics as em
from gazeforge.types import BBox

# --- grounding -------------------------------------------------------------------
gt = {
    "s1: small right effusion": [BBox(0, 0, 9, 9)],
    "s2: cardiomegaly": [BBox(20, 20, 39, 39)],
}
preds = [
    em.GroundingPrediction("s1: small right effusion", ((BBox(0, 0, 9, 4), 0.9),)),
    em.GroundingPrediction(
        "s2: cardiomegaly",
        ((BBox(22, 22, 39, 39), 0.8), (BBox(70, 70, 80, 80), 0.3)),
    ),
]
miou = em.grounding_miou(preds, gt)
mean_ap = em.grounding_map(preds, gt)
print("grounding:")
print(f"  merged-mask mean IoU over confidence thresholds: {miou['miou']:.3f}")
print(f"    per threshold: { {t: round(v, 3) for t, v in miou['per_threshold'].items()} }")
print(f"  detection-style mAP over IoU thresholds:         {mean_ap['map']:.3f}")

# --- report text -----------------------------------------------------------------
reference = "Small right pleural effusion. No pneumothorax."
candidate = "There is a small right pleural effusion without pneumothorax."
ref_toks = em.tokenize(reference)
cand_toks = em.tokenize(candidate)
print("\nreport text metrics:")
print(f"  reference: {reference!r}")
print(f"  candidate: {candidate!r}")
scores = em.bleu(cand_toks, [ref_toks])
for n, s in enumerate(scores, start=1):
    print(f"  BLEU-{n}: {s:.3f}")
print(f"  ROUGE-L: {em.rouge_l(cand_toks, ref_toks):.3f}")
print(f"  METEOR (exact-match simplified): {em.meteor_simplified(cand_toks, ref_toks):.3f}")

# --- labels ----------------------------------------------------------------------
gts = [
    em.LabelRecord("r1", {"Pleural Effusion": "positive", "Pneumothorax": "negative"}),
    em.LabelRecord("r2", {"Edema": "uncertain"}),
]
pred_records = [
    em.LabelRecord("r1", {"Pleural Effusion": "positive", "Pneumothorax": "positive"}),
    em.LabelRecord("r2", {"Edema": "uncertain"}),
]
print("\nlabel F1:")
for mode in (em.POSITIVE_ONLY, em.MULTICLASS):
    rep = em.label_f1(pred_records, gts, mode)
    print(f"  {mode}: micro={rep.micro:.3f} macro={rep.macro:.3f}")
    if mode == em.MULTICLASS:
        print(f"    per class: { {k: v for k, v in rep.per_class.items()} }")

# --- phrase match -----------------------------------------------------------------
print("\nphrase-match accuracy:")
cases = [
    ("pleural effusion", "pleural effusion"),
    ("edema, effusion", "effusion"),
    ("pleural", "pleural effusion"),
]
for pred, truth in cases:
    hit = em.vqa_top1_phrase_match(pred, truth)
    print(f"  {pred!r} vs {truth!r} -> {'match' if hit else 'no match'}")
