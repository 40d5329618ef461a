#!/usr/bin/env python3
"""Writes the example-pool fixtures and the hand-assembled golden prompts.

The golden prompts are assembled here from the prompt figures' wording and the
rubric resource files, independently of the C++ renderer.
"""
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent
ROOT = HERE.parent.parent
RES = ROOT / "resources"

topics = ["the ablation study", "Table 3", "the related work section", "the loss in Eq. 2",
          "the human evaluation", "Figure 4", "the baseline choice", "the dataset split",
          "the runtime analysis", "the appendix proofs"]


def pool_rows():
    rows = []
    for label in range(1, 6):
        for i, topic in enumerate(topics):
            text = f"Comment {label}.{i} about {topic}: it is unclear how this was done."
            if label == 3 and i == 0:
                text = 'The term "robust" in the abstract is never defined.'
            rows.append({"text": text, "label": str(label),
                         "rationale": f"Rationale for score {label} on {topic}."})
    return rows


def claim_rows():
    rows = []
    for i in range(15):
        rows.append({"text": f"The method in section {i} should be compared to a stronger baseline.",
                     "label": "Claim", "rationale": "The comment makes a suggestion."})
        rows.append({"text": f"The paper uses {i + 2} datasets.",
                     "label": "No Claim", "rationale": "The comment states a fact."})
    return rows


def read(p):
    return (RES / p).read_text(encoding="utf-8").strip()


def description(aspect):
    d = RES / "rubrics" / "v1" / aspect
    parts = [read(f"rubrics/v1/{aspect}/preamble.txt") + "\n\nLabels"]
    intro = d / "labels_intro.txt"
    head = parts[0] + "\n"
    if intro.exists():
        head += intro.read_text(encoding="utf-8").strip() + "\n\n"
    labels = [read(f"rubrics/v1/{aspect}/{s}.txt") for s in "12345"]
    if aspect == "verifiability":
        labels.append(read("rubrics/v1/verifiability/X.txt"))
    return head + "\n\n".join(labels)


UTILITY = ("This aspect is aimed to maximize the utilization of the review comments for the authors. "
           "The primary purpose of the review is to help/guide authors in improving their drafts. "
           "Keep this in mind while evaluating the review point. Whenever you encounter a borderline "
           "case, think: “Will this review point help authors improve their draft?”. There is no "
           "correlation between the aspect score and the length of the review point.")


def single_prompt(aspect_name, aspect_dir, examples, review):
    out = UTILITY + "\n\n"
    out += "Evaluate the review point based on the aspect description provided next.\n\n"
    out += aspect_name + "\n\n" + description(aspect_dir) + "\n\n"
    out += read("prompts/v1/single_instruction_rationale.txt") + "\n\n"
    for ex in examples:
        out += "Review Point: " + ex["text"] + "\nOutput: " + json.dumps(
            {"rationale": ex["rationale"], "label": ex["label"]}, ensure_ascii=False,
            separators=(",", ":")) + "\n\n"
    return out + "Review Point: " + review


def multi_prompt(review, with_rationale):
    keys = []
    for a in ["actionability", "grounding_specificity", "verifiability", "helpfulness"]:
        if with_rationale:
            keys.append(a + "_rationale")
        keys.append(a + "_label")
    skeleton = "{\n" + ",\n".join(
        f'  "{k}": "[{k.replace("_", " ").upper()}]"' for k in keys) + "\n}"
    instruction = ("Evaluate the review based on the given definitions of the aspect(s) above. "
                   + ("Generate a rationale and use it to output the score. Escape the double qoutes inside the rationale."
                      if with_rationale else "Output only the score."))
    task = UTILITY.replace("This aspect is aimed", "These aspects are aimed")
    return ("###Task Description:\nYou are an expert in evaluating peer review comments with respect to "
            "different aspects. " + task + "\n\n"
            "Aspect: actionability\n\n" + description("actionability") + "\n\n"
            "Aspect: Grounding & Specificity\n\n" + description("grounding_specificity") + "\n\n"
            "Aspect: Verifiability\n\n" + description("verifiability") + "\n\n"
            "Aspect: Helpfulness\n\n" + description("helpfulness") + "\n\n"
            "###Instruction:\n\n" + instruction + "\n\n"
            "###Review Point: " + review + "\n\n###Output: " + skeleton)


REVIEW = 'The paper claims "state of the art" results but Table 2 omits the strongest baseline.'

if __name__ == "__main__":
    rows = pool_rows()
    with open(HERE / "pools" / "actionability.jsonl", "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")
    with open(HERE / "pools" / "claims.jsonl", "w", encoding="utf-8") as f:
        for r in claim_rows():
            f.write(json.dumps(r, ensure_ascii=False) + "\n")
    first_five = [r for lab in "12345" for r in [x for x in rows if x["label"] == lab][:5]]
    (HERE / "golden" / "single_actionability.txt").write_text(
        single_prompt("Actionability", "actionability", first_five, REVIEW), encoding="utf-8")
    (HERE / "golden" / "single_empty.txt").write_text(
        single_prompt("Helpfulness", "helpfulness", [], REVIEW), encoding="utf-8")
    (HERE / "golden" / "multi_rationale.txt").write_text(multi_prompt(REVIEW, True), encoding="utf-8")
    (HERE / "golden" / "multi_score.txt").write_text(multi_prompt(REVIEW, False), encoding="utf-8")
