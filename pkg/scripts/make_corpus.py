"""Regenerate the bundled miniature sentiment corpus.

Usage: python3 scripts/make_corpus.py [out_path]

Tweets come from two sources.  Most are "linear" tweets whose label is a
noisy function of mild sentiment words.  The rest carry one strongly
polarized token that decides the label even though the surrounding words
often lean the other way.  About three in four tweets are positive.
"""

import sys
from pathlib import Path

import numpy as np

SEED = 20240611
N_DOCS = 2000

# each entry lists surface forms of one word
STRONG_POS = [["love", "loved", "loves", "loving"], ["thanks", "thank"], ["awesome"], ["excited", "exciting"],
              ["amazing"], ["congrats"], ["brilliant"]]
STRONG_NEG = [["hate", "hated", "hates", "hating"], ["worst"], ["awful"], ["ruined", "ruins", "ruin"],
              ["disappointed", "disappointing"], ["stupid"], ["failure", "failed", "fails"], ["shame"],
              ["annoying", "annoyed"]]
MILD_POS = [["good"], ["nice"], ["fun"], ["cool"], ["happy"], ["glad"], ["enjoy", "enjoyed", "enjoying"],
            ["pretty"], ["fine"], ["sweet"], ["smile", "smiling"], ["lucky"]]
MILD_NEG = [["bad"], ["sad"], ["tired"], ["boring", "bored"], ["late"], ["sick"], ["miss", "missed", "missing"],
            ["wrong"], ["cold"], ["hard"], ["slow"], ["broke", "broken"]]
TOPICS = [
    "game", "match", "team", "movie", "show", "concert", "phone", "update", "weekend", "monday", "coffee",
    "train", "bus", "school", "class", "exam", "work", "office", "weather", "rain", "beach", "party",
    "album", "song", "episode", "season", "trip", "flight", "hotel", "dinner", "lunch", "pizza", "book",
    "store", "app", "laptop", "battery", "ticket", "stadium", "coach", "player", "festival", "series",
]
# rare words; a few look like rules by chance in a small training split
TAIL = """
apple arcade avenue bakery balcony banner basket bicycle blanket bottle bridge bucket cabin camera candle
canyon carpet castle cereal chapter cherry circus closet cookie cottage crayon curtain daisy desert diary
dolphin drawer eagle engine fabric farmer feather fence forest fountain garage garden ginger glacier
hammer harbor helmet honey island jacket jungle kettle kitten ladder lantern lemon library lizard magnet
marble meadow mirror monkey mountain museum napkin needle noodle ocean orchard oven paddle panda parrot
pebble pencil pepper piano pillow planet pocket pond puzzle rabbit radio ribbon river rocket saddle
salmon sandal scarf shovel singer sketch sofa spider spoon squirrel statue sticker street sugar sunset
tablet teapot tiger tomato tower tractor tunnel turtle umbrella valley violin wagon walnut window wizard
""".split()
SYLLABLES = ["ka", "lo", "mi", "ze", "tor", "van", "ril", "bu", "sen", "da", "pho", "gri", "nel", "os", "tu"]


def hashtags(rng, n=1500):
    """Distinct made-up hashtags, Zipf-weighted so most are rare."""
    tags = set()
    while len(tags) < n:
        parts = rng.choice(SYLLABLES, size=rng.integers(2, 4))
        tags.add("#" + "".join(parts))
    tags = sorted(tags)
    rng.shuffle(tags)
    weights = 1.0 / np.arange(1, n + 1) ** 0.8
    return tags, weights / weights.sum()


FILLER = [
    "the", "a", "is", "was", "so", "this", "that", "my", "our", "today", "tonight", "just", "really", "with",
    "at", "on", "for", "and", "it", "i", "we", "you", "all", "about", "again", "still", "now", "got",
    "going", "watching", "playing", "waiting", "new", "first", "last", "big", "little", "day", "night",
]
HANDLES = ["@sam", "@alex", "@news", "@team", "@jo"]
LINKS = ["http://t.co/x1", "https://bit.ly/abc", "www.example.com/p"]


def _word(rng, pool, plural=False):
    w = pool[rng.integers(len(pool))]
    if isinstance(w, list):
        return w[rng.integers(len(w))]
    if plural and not w.endswith("s") and rng.random() < 0.3:
        w += "s"
    return w


def make_docs(seed=SEED, n=N_DOCS):
    rng = np.random.default_rng(seed)
    tags, tag_p = hashtags(np.random.default_rng(seed + 1))
    docs = []
    for _ in range(n):
        words = [_word(rng, FILLER) for _ in range(rng.integers(3, 7))]
        words += [_word(rng, TOPICS, plural=True) for _ in range(rng.integers(1, 3))]
        words += [_word(rng, TAIL) for _ in range(rng.integers(0, 3))]
        words += list(rng.choice(tags, size=rng.integers(0, 4), p=tag_p))
        u = rng.random()
        if u < 0.3:
            # strongly polarized token decides; context often leans the other way
            neg = rng.random() < 0.45
            words.append(_word(rng, STRONG_NEG if neg else STRONG_POS))
            label = -1 if neg else 1
            if rng.random() < 0.03:
                label = -label
            mislead = MILD_POS if neg else MILD_NEG
            words += [_word(rng, mislead) for _ in range(rng.integers(2, 5))]
        else:
            label = 1 if rng.random() < 0.8 else -1
            for _ in range(rng.integers(2, 5)):
                agree = rng.random() < 0.85
                pool = (MILD_POS if label > 0 else MILD_NEG) if agree else (MILD_NEG if label > 0 else MILD_POS)
                words.append(_word(rng, pool))
        rng.shuffle(words)
        text = " ".join(words)
        if rng.random() < 0.3:
            text = HANDLES[rng.integers(len(HANDLES))] + " " + text
        if rng.random() < 0.2:
            text += " " + LINKS[rng.integers(len(LINKS))]
        if rng.random() < 0.3:
            text += "!" * int(rng.integers(1, 4))
        if rng.random() < 0.15:
            text = text.replace(" is ", " isn't ", 1)
        docs.append((label, text))
    return docs


def main(argv):
    out = Path(argv[1]) if len(argv) > 1 else Path(__file__).resolve().parents[1] / "src/rulesfirst/data/mini_tweets.tsv"
    with open(out, "w", encoding="utf-8") as fh:
        for label, text in make_docs():
            fh.write(f"{label:+d}\t{text}\n")


if __name__ == "__main__":
    main(sys.argv)
