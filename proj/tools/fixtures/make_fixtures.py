#!/usr/bin/env python3
"""Regenerates the datasets, mock model fixtures, word corpus and config
under data/ and config/.

Usage: python3 tools/fixtures/make_fixtures.py [repo_root]

The word corpus needs the `wordfreq` package; when it is missing the
existing data/corpus/words.txt is kept.
"""

import json
import re
import sys
from pathlib import Path

ROOT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[2]
DATA = ROOT / "data"

LABELS = ["world", "sports", "business", "sci/tech"]
VERBALIZERS = {
    "world": ["world", "politics"],
    "sports": ["sports"],
    "business": ["business", "economy"],
    "sci/tech": ["science", "technology", "tech"],
}

TRAIN = {
    "world": [
        "Leaders of the Pacific island nations met in Fiji to discuss rising sea levels",
        "The coalition government in Rome collapsed after a confidence vote on Tuesday",
        "Thousands marched in Santiago demanding changes to the pension system",
        "Peace talks between the rebel group and the army resumed in Geneva",
        "The foreign minister of Japan arrived in Seoul for a two day visit",
        "Flooding along the Danube forced evacuations in three Hungarian towns",
        "Election officials in Kenya began counting ballots late on Sunday night",
        "The United Nations envoy warned of famine in the Horn of Africa",
        "Border guards reopened the crossing between Poland and Belarus",
        "Protesters in Hong Kong gathered outside the legislative council",
    ],
    "sports": [
        "The striker scored twice as the visitors won the derby in extra time",
        "A rookie quarterback led the comeback with two touchdowns in the fourth quarter",
        "The defending champion was knocked out of the tournament in straight sets",
        "Cyclists faced a brutal mountain stage in the Alps on Thursday",
        "The cricket board named a new captain for the tour of Australia",
        "Her world record in the 400 metres stood for almost a decade",
        "The home side clinched the pennant with a walk off homer",
        "Fans packed the stadium for the final round of the golf major",
        "The coach was fined after criticizing the referee on live television",
        "A late penalty gave the underdogs a draw against the league leaders",
    ],
    "business": [
        "Shares of the retailer fell after it cut its profit forecast for the year",
        "The central bank left interest rates unchanged for a third meeting",
        "Oil prices climbed as producers agreed to extend output cuts",
        "The carmaker will close two plants and shed four thousand jobs",
        "A merger between the two regional banks was approved by regulators",
        "Quarterly earnings at the airline beat analyst expectations",
        "The bond market rallied after weaker than expected jobs data",
        "The brewer raised prices to offset higher costs for barley",
        "Investors pulled money from emerging market funds for a sixth week",
        "The chain of coffee shops plans an initial public offering next spring",
    ],
    "sci/tech": [
        "Researchers sequenced the genome of a wheat variety resistant to drought",
        "The space agency delayed the launch of its lunar lander by a month",
        "A new chip design promises to halve the power used by data centres",
        "Astronomers detected water vapour in the atmosphere of a distant planet",
        "The browser update patches a flaw that let attackers run code remotely",
        "Engineers built a battery that charges fully in under ten minutes",
        "A study links gut bacteria to the severity of seasonal allergies",
        "The open source project released a faster compiler for mobile apps",
        "Physicists cooled atoms to a billionth of a degree above absolute zero",
        "The telescope captured images of a galaxy forming soon after the big bang",
    ],
}

TEST = {
    "world": [
        "Rescue teams searched the rubble after an earthquake struck eastern Turkey",
        "The prime minister of India hosted talks with the president of France",
        "Voters in Chile rejected the draft of a new constitution",
        "Aid convoys reached the besieged city after a ceasefire took hold",
        "The summit in Brussels ended without agreement on migration quotas",
    ],
    "sports": [
        "The goalkeeper saved three penalties to send his club into the final",
        "The marathon was won in a course record despite the heat",
        "An injury to the point guard leaves the team short for the playoffs",
        "The rugby squad announced its lineup for the opening test match",
        "The teenager won her first grand slam title on the clay courts",
    ],
    "business": [
        "The software maker reported revenue growth of eleven percent",
        "Mortgage rates rose to their highest level in two decades",
        "The grocery chain agreed to buy a rival for three billion dollars",
        "Factory orders dropped for a second month as demand cooled",
        "The shipping company warned that freight costs would stay high",
    ],
    "sci/tech": [
        "Scientists trained a model to predict how proteins fold",
        "The satellite will map methane leaks from orbit",
        "A vaccine trial showed strong results against the new variant",
        "The phone maker unveiled a foldable handset with a larger screen",
        "Geologists found evidence of an ancient lake on Mars",
    ],
}

SEEDS = [
    "What label best describes this news article? [text]",
    "[text] What label best describes this news article?",
    "Is this a piece of news regarding world politics, sports, business, or science and technology? [text]",
    "[text] Is this a piece of news regarding world politics, sports, business, or science and technology?",
    "[text] Which of the following sections of a newspaper would this article likely appear in world news, sports, business, or science and technology?",
    "Which of the following sections of a newspaper would this article likely appear in world news, sports, business, or science and technology? [text]",
    "Classify the topic of the following news: [text]",
    "[text] Classify the topic of the news above.",
    "What is this news article mainly about? [text]",
    "[text] What is this news article mainly about?",
]

# heuristic accuracy per seed under the masked mock model, in twentieths
SEED_CORRECT = [12, 9, 17, 15, 11, 18, 19, 13, 10, 8]

P1_BANK = [
    "Which label fits this news article?",
    "What is the right label for this piece of news?",
    "Pick the label that best describes this news article.",
    "Choose a category name for the following news item.",
    "Classify this news story with one label.",
]
TOPIC_BANK = [
    "Tell me the best topic for this news article?",
    "What category would this news article best be in?",
    "What topic best describes this news story?",
    "Which term accurately categorizes this current news report?",
    "Under which heading should this story be filed?",
]
GENERIC_CORRECT = 14        # every other template: 0.70
P1_PARAPHRASE_CORRECT = 12  # surviving paraphrases of P1: 0.60
WINNER = "Which term accurately categorizes this current news report?"
WINNER_CORRECT = 16         # 0.80

# generative mock, seed P6
GEN_ZERO_SHOT_CORRECT = 6                                 # 0.30
GEN_KSHOT_CORRECT = {1: 10, 2: 16, 3: 16, 4: 14, 5: 12}   # best k = 2
GEN_GENERIC_CORRECT = 11

OOD = [
    "Boeing continued to build the 787 even while it was prevented from making deliveries in late 2021 and much of 2022",
    "Early Thursday, Microsoft will begin revving its engines squarely in Google's direction with the Beta launch of the new MSN Search engine.",
    "Ukraine is building the world's largest laboratory to be filled with chemicals",
    "Tesla crashed into a pedestrian on Tuesday killing the pedestrian making it lose share market now raising questions on AI.",
    "The finance ministry said inflation eased to four percent in March",
    "A heatwave across southern Europe set temperature records in Spain",
    "The chess champion defended her title in a tense rapid playoff",
    "A startup raised funding to build robots that sort recycling",
]


def lev(a, b):
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def theta(seed):
    return 20 if len(re.findall(r"[a-z0-9']+", seed.lower())) < 10 else 25


def survivors(seed, bank):
    t = theta(seed)
    out = []
    for c in bank:
        if lev(c, seed) > t and all(lev(c, a) > t for a in out):
            out.append(c)
    return out


def points(split, prefix):
    out = []
    n = 0
    per_class = max(len(v) for v in split.values())
    # interleave classes so ids do not encode the label
    for i in range(per_class):
        for label in LABELS:
            n += 1
            out.append({"id": f"{prefix}{n:02d}", "text": split[label][i], "label": label})
    return out


def scores_for(gold, predicted, biased=False):
    s = {l: 0.1 for l in LABELS}
    if biased:
        # second choice leans to business or sports
        runner = "sports" if predicted == "business" else "business"
        s[runner] = 0.25
    if predicted == gold:
        s[gold] = 0.55
    else:
        s[predicted] = 0.5
        s[gold] = 0.3
    return s


def wrong_label(gold, biased=False):
    if biased:
        return "sports" if gold == "business" else "business"
    return LABELS[(LABELS.index(gold) + 1) % len(LABELS)]


def correct_set(test, count, offset):
    order = [test[(offset + i) % len(test)]["id"] for i in range(len(test))]
    return set(order[:count])


def prefix_rule(template_text, point, scores, **extra):
    """Rule matching `template_text` filled with `point`."""
    stripped = template_text.replace("[text]", "").strip()
    if template_text.lstrip().startswith("[text]"):
        rule = {"pattern": " " + stripped, "anchor": "end", "also": [point["text"]]}
    else:
        rule = {"pattern": stripped + " ", "anchor": "start", "also": [point["text"]]}
    rule.update(extra)
    rule["scores"] = scores
    return rule


def template_rules(template_text, test, count, offset, biased=False, **extra):
    good = correct_set(test, count, offset)
    rules = []
    for p in test:
        pred = p["label"] if p["id"] in good else wrong_label(p["label"], biased)
        rules.append(prefix_rule(template_text, p, scores_for(p["label"], pred, biased), **extra))
    return rules


def generic_rules(test, count, offset):
    good = correct_set(test, count, offset)
    rules = []
    for p in test:
        pred = p["label"] if p["id"] in good else wrong_label(p["label"])
        rules.append({"pattern": p["text"], "scores": scores_for(p["label"], pred)})
    return rules


def ood_rules():
    return [
        {"pattern": "Boeing", "scores": {"world": 0.1, "sports": 0.1, "business": 0.6, "sci/tech": 0.2}},
        {"pattern": "Ukraine", "scores": {"world": 0.5, "sports": 0.1, "business": 0.15, "sci/tech": 0.25}},
        {"pattern": "Microsoft", "scores": {"world": 0.1, "sports": 0.1, "business": 0.5, "sci/tech": 0.3}},
        {"pattern": "Tesla", "scores": {"world": 0.1, "sports": 0.1, "business": 0.45, "sci/tech": 0.35}},
    ]


DEFAULT_SCORES = {l: 0.25 for l in LABELS + ["negative", "positive"]}


def write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), encoding="utf-8")


def check_unique_texts(train, test):
    texts = [p["text"] for p in train + test]
    assert len(set(texts)) == len(texts)
    for a in texts:
        for b in texts:
            assert a == b or a not in b, (a, b)
        for s in SEEDS + P1_BANK + TOPIC_BANK:
            assert a not in s
        for word in ("Boeing", "Ukraine", "Microsoft", "Tesla"):
            assert word not in a


def ag_news():
    train = points(TRAIN, "tr")
    test = points(TEST, "te")
    check_unique_texts(train, test)
    base = DATA / "ag_news"
    write_jsonl(base / "train.jsonl", train)
    write_jsonl(base / "test.jsonl", test)
    write_json(base / "manifest.json", {
        "name": "ag_news",
        "task_type": "topic classification",
        "classes": LABELS,
        "verbalizers": VERBALIZERS,
        "train": "train.jsonl",
        "test": "test.jsonl",
        "seed_templates": SEEDS,
    })
    return train, test


def masked_fixture(test):
    p1 = SEEDS[0]
    p1_seed = p1.replace("[text]", "").strip()
    p1_survivors = survivors(p1_seed, P1_BANK)
    topic_seed = "What topic best describes this news article?"
    topic_survivors = survivors(topic_seed, TOPIC_BANK)
    assert len(p1_survivors) == 3, p1_survivors
    assert len(topic_survivors) == 3 and WINNER in topic_survivors, topic_survivors
    assert TOPIC_BANK[0] not in topic_survivors

    rules = ood_rules()
    for i, (seed, count) in enumerate(zip(SEEDS, SEED_CORRECT)):
        rules += template_rules(seed, test, count, offset=3 * i, biased=(i == 0))
    for j, s in enumerate(p1_survivors):
        rules += template_rules(s + " [text]", test, P1_PARAPHRASE_CORRECT, offset=5 + 2 * j, biased=True)
    rules += template_rules(WINNER + " [text]", test, WINNER_CORRECT, offset=1, biased=True)
    rules += generic_rules(test, GENERIC_CORRECT, offset=2)
    return {
        "rules": rules,
        "default_scores": DEFAULT_SCORES,
        "paraphrase_bank": {p1_seed: P1_BANK, topic_seed: TOPIC_BANK},
        "generations": {"Ukraine": "World"},
    }


def generative_fixture(test):
    p6 = SEEDS[5]
    prefix = p6.replace("[text]", "").strip() + " "
    rules = ood_rules()
    rules += template_rules(p6, test, GEN_ZERO_SHOT_CORRECT, offset=4, lines=1)
    for k, count in GEN_KSHOT_CORRECT.items():
        good = correct_set(test, count, offset=k)
        for p in test:
            pred = p["label"] if p["id"] in good else wrong_label(p["label"])
            rules.append({"pattern": p["text"], "anchor": "end", "also": [prefix], "lines": k + 1,
                          "scores": scores_for(p["label"], pred)})
    rules += generic_rules(test, GEN_GENERIC_CORRECT, offset=7)
    return {
        "rules": rules,
        "default_scores": DEFAULT_SCORES,
        "paraphrase_bank": {},
        "generations": {"Ukraine": "World", "Boeing": "Business"},
    }


def amazon_polarity():
    neg = [
        "The zipper broke the first time I used this bag",
        "Battery life is nowhere near what the box claims",
        "Arrived scratched and the seller never answered my emails",
        "The instructions were useless and two screws were missing",
        "It stopped charging after a week of light use",
        "Smells like burnt plastic every time it heats up",
        "The strap is flimsy and the stitching came loose",
        "Sound quality is tinny and the bass is gone",
        "Way too small even though I ordered my usual size",
        "The lid leaks no matter how tight you close it",
        "Customer service sent me the wrong replacement twice",
        "The paint chipped off within days of mounting it",
        "This blender cannot crush ice at all",
        "Pages fell out of the binding after one read",
        "The app keeps disconnecting from the speaker",
        "Colors look nothing like the photos on the listing",
        "Loud fan noise makes it unusable at night",
        "The handle snapped while lifting a light pot",
        "It took three weeks to arrive and was broken",
        "The screen protector bubbles and will not stick",
        "Returned it because the keys kept sticking",
        "Cheap material that tears with gentle use",
        "The timer resets itself randomly",
        "Cushions went flat after a month",
        "Wheels squeak loudly on every floor",
    ]
    pos = [
        "Fits perfectly and the fabric feels great",
        "Setup took five minutes and it works flawlessly",
        "Best purchase I have made for my kitchen this year",
        "The battery easily lasts through a full weekend trip",
        "Sturdy build and the finish looks premium",
        "My kids love it and it survived plenty of drops",
        "Crisp sound with deep bass for the price",
        "Keeps coffee hot for hours without any leaks",
        "Comfortable enough to wear all day at work",
        "The author makes a complex subject easy to follow",
        "Arrived early and packed with great care",
        "Bright display that is easy to read outdoors",
        "Quiet motor and very easy to clean",
        "Exactly as described and great value",
        "The blades stay sharp after months of use",
        "Lightweight yet holds everything I need",
        "Customer support replaced a part within two days",
        "Charges quickly and holds a charge for days",
        "Beautiful colors that match the photos",
        "Simple controls that my parents can use",
        "The stroller folds with one hand",
        "Great grip and it never slips",
        "Soft sheets that stay cool at night",
        "Reliable timer and the alarm is loud enough",
        "Smooth wheels that glide on carpet",
    ]
    train = []
    source = []
    for i, (n, p) in enumerate(zip(neg, pos)):
        if i < 5:
            train += [{"id": f"ap-tr{2 * i + 1:02d}", "text": n, "label": "negative"},
                      {"id": f"ap-tr{2 * i + 2:02d}", "text": p, "label": "positive"}]
        else:
            source += [{"id": f"ap-src{2 * i - 9:02d}", "text": n, "label": "negative"},
                       {"id": f"ap-src{2 * i - 8:02d}", "text": p, "label": "positive"}]
    base = DATA / "amazon_polarity"
    write_jsonl(base / "train.jsonl", train)
    write_jsonl(base / "test_source.jsonl", source)
    write_json(base / "manifest.json", {
        "name": "amazon_polarity",
        "task_type": "sentiment classification",
        "classes": ["negative", "positive"],
        "verbalizers": {"negative": ["negative", "bad"], "positive": ["positive", "good"]},
        "train": "train.jsonl",
        "test_source": "test_source.jsonl",
        "test_size": 20,
        "seed": 7,
        "seed_templates": [
            "Is this review positive or negative? [text]",
            "[text] Is this review positive or negative?",
            "What is the sentiment of this review? [text]",
        ],
    })


# kept out of the corpus so demo suggestions stay presentable
BLOCKLIST = {
    "fuck", "fucking", "fucked", "fucker", "fuckin", "shit", "shitty", "bitch", "bitches", "cunt", "dick",
    "dicks", "cock", "cocks", "pussy", "boobs", "tits", "titties", "porn", "porno", "nigga", "niggas", "nigger",
    "fag", "faggot", "slut", "sluts", "whore", "whores", "asshole", "assholes", "motherfucker", "bullshit",
    "dildo", "horny", "blowjob", "anal", "cum", "twat", "wank", "wanker", "retard", "retarded", "hoe", "hoes",
    "penis", "vagina", "nude", "nudes", "naked", "sex", "sexy", "xxx", "milf", "boob", "damn", "goddamn",
}


def corpus():
    try:
        from wordfreq import top_n_list
    except ImportError:
        print("wordfreq not installed; keeping data/corpus/words.txt")
        return
    words = [w for w in top_n_list("en", 20000)
             if re.fullmatch(r"[a-z][a-z']*", w) and w not in BLOCKLIST][:10000]
    assert len(words) == 10000
    path = DATA / "corpus" / "words.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(words) + "\n", encoding="utf-8")


def config():
    write_json(ROOT / "config" / "workbench.json", {
        "listen": "127.0.0.1:8080",
        "datasets": ["../data/ag_news/manifest.json", "../data/amazon_polarity/manifest.json"],
        "models": [
            {"id": "roberta-mock", "kind": "masked",
             "backend": {"type": "mock", "fixture": "../data/mock/roberta.json"}},
            {"id": "gpt2-mock", "kind": "generative",
             "backend": {"type": "mock", "fixture": "../data/mock/gpt2.json"}},
        ],
        "corpus": "../data/corpus/words.txt",
        "embedding": {"type": "mock", "dimension": 16, "salt": "promptaid"},
        "default_seed": 7,
        "session_file": "../session.json",
        "samples_per_type": 5,
        "paraphrase_candidates": 10,
        "parallelism": 1,
    })
    write_json(ROOT / "config" / "remote.example.json", {
        "listen": "0.0.0.0:8080",
        "datasets": ["../data/ag_news/manifest.json"],
        "models": [
            {"id": "remote-masked", "kind": "masked",
             "backend": {"type": "remote", "base_url": "http://127.0.0.1:9000", "auth": "", "timeout_ms": 30000}},
            {"id": "remote-generative", "kind": "generative", "max_new_tokens": 16,
             "backend": {"type": "remote", "base_url": "http://127.0.0.1:9000", "timeout_ms": 30000,
                         "paraphrase_instruction":
                             "Paraphrase the following instruction {n} different ways. Reply with one "
                             "paraphrase per line and nothing else.\nInstruction: {seed}"}},
        ],
        "corpus": "../data/corpus/words.txt",
        "embedding": {"type": "remote", "base_url": "http://127.0.0.1:9001", "dimension": 384,
                      "cache": "../embedding-cache.jsonl"},
        "session_file": "../session.json",
    })


def main():
    _, test = ag_news()
    write_json(DATA / "mock" / "roberta.json", masked_fixture(test))
    write_json(DATA / "mock" / "gpt2.json", generative_fixture(test))
    write_json(DATA / "ood_snippets.json", OOD)
    amazon_polarity()
    corpus()
    config()


if __name__ == "__main__":
    main()
