#!/usr/bin/env python3
"""Regenerate the committed resources/ tree.

Dev-side only: the package itself ships no merge-table trainer, so the
toy tokenizers, lexicons, language models, and demo files are built
here and committed. Everything is deterministic; rerunning the script
reproduces the tree byte for byte.

Usage: python3 scripts/build_toy_resources.py [--root DIR]
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from collections import Counter
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from codemix.corpus import Dataset, Message, save_jsonl
from codemix.langdetect import train_ngram_model

EN_WORDS = """
the of and to in is you that it he was for on are as with his they at be this
have from or one had by word but not what all were we when your can said there
use an each which she do how their if will up other about out many then them
these so some her would make like him into time has look two more write go see
number no way could people my than first water been call who its now find long
down day did get come made may part over new sound take only little work know
place year live me back give most very after thing our just name good sentence
man think say great where help through much before line right too mean old any
same tell boy follow came want show also around form three small set put end
does another well large must big even such because turn here why ask went men
read need land different home us move try kind hand picture again change off
play spell air away animal house point page letter mother answer found study
still learn should america world moving visa permit city winter language school
doctor appointment health insurance apartment rent job interview friendly
weather snow coffee train bus ticket bank account phone email website online
booking queue system card police office register registration municipality
paperwork residence really anyone everyone nobody today tomorrow yesterday
morning evening thanks please welcome sorry question advice experience process
waiting months weeks living moved arrived started working studying learning
""".split()

FI_REAL = """
kiitos paljon hyvä päivä huomenta tervetuloa anteeksi suomi suomeksi puhua
puhun vähän ymmärrän ystävä perhe talo koti kaupunki katu tori kauppa ruoka
vesi maito leipä juusto kahvi kello aika tänään huomenna eilen viikko kuukausi
vuosi talvi kesä syksy kevät lumi sade pakkanen sauna järvi metsä mökki
terveyskeskus terveys keskus kirjasto koulu opiskella opettaja lääkäri sairaala
apteekki virasto maistraatti vero verotoimisto pankki tili raha työ työpaikka
haastattelu asunto vuokra muutto muuttaa kela posti juna bussi lippu matka loma
joulu juhannus kippis moikka moi hei heippa nähdään huomiseen kiva tosi todella
erittäin mukava kaunis kylmä kuuma lämmin uusi vanha iso pieni nopea hidas
helppo vaikea suomalainen ulkomaalainen maahanmuuttaja oleskelulupa
henkilötunnus pankkitili kirjastokortti bussikortti opiskelija yliopisto kurssi
kieli kielikurssi sana lause puhelin sähköposti verkkosivu ajanvaraus jono
järjestelmä kortti poliisi toimisto lomake rekisteröinti kaamos pulla korvapuusti
""".split()

ES_REAL = """
hola gracias buenos días buenas noches tardes adiós hasta luego mañana ayer hoy
semana mes año tiempo invierno verano otoño primavera lluvia nieve frío calor
ciudad calle mercado tienda comida agua leche pan queso café reloj hora casa
hogar pueblo biblioteca escuela estudiar maestro médico hospital farmacia
oficina impuesto banco cuenta dinero trabajo entrevista apartamento alquiler
mudanza correo tren autobús billete viaje vacaciones navidad salud amigo
familia hablar hablo poco entiendo idioma español inglés gente bueno bonito
hermoso nuevo viejo grande pequeño rápido lento fácil difícil quiero necesito
ayuda por favor también siempre nunca aquí allí dónde cuándo cómo porque
permiso residencia extranjero inmigrante cita número teléfono registro
formulario policía tarjeta sistema cola página sitio biblioteca ventanilla
""".split()

FI_SYLLABLES = [
    "ka", "ko", "ku", "ky", "kä", "ta", "te", "to", "tu", "ty", "tä", "pa",
    "pe", "pi", "po", "pu", "sa", "se", "si", "so", "su", "sy", "sä", "ma",
    "me", "mi", "mu", "my", "mä", "na", "ne", "ni", "nu", "nä", "la", "le",
    "li", "lo", "lu", "lä", "ra", "re", "ri", "ro", "ru", "rä", "va", "ve",
    "vi", "vo", "vä", "ha", "he", "hi", "ho", "hu", "hä", "ja", "jo", "ju",
    "jä", "kaa", "tuu", "lii", "soo", "myy", "pää", "vää",
]
FI_SUFFIXES = ["", "nen", "inen", "lla", "llä", "ssa", "ssä", "sti", "us", "ton"]

ES_SYLLABLES = [
    "ba", "be", "bi", "bo", "bu", "ca", "co", "cu", "da", "de", "di", "do",
    "du", "fa", "fe", "fi", "fo", "ga", "go", "gu", "la", "le", "li", "lo",
    "lu", "ma", "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu", "pa",
    "pe", "pi", "po", "pu", "ra", "re", "ri", "ro", "ru", "sa", "se", "si",
    "so", "su", "ta", "te", "ti", "to", "tu", "va", "ve", "vi", "vo", "ña",
    "ño", "bra", "tre", "dri", "glo", "cru",
]
ES_SUFFIXES = ["", "ción", "dad", "mente", "ero", "era", "ista", "ura", "oso", "'"]


def pseudo_words(syllables, suffixes, seed, n, taken):
    """Deterministic pronounceable filler words that collide with nothing."""
    rng = random.Random(seed)
    out = []
    seen = set(taken)
    while len(out) < n:
        word = "".join(rng.choice(syllables) for _ in range(rng.randint(2, 4)))
        word += rng.choice(suffixes)
        word = word.replace("'", "")
        if len(word) < 4 or word in seen:
            continue
        seen.add(word)
        out.append(word)
    return out


def build_lexicons():
    en = sorted(set(EN_WORDS))
    fi_real = [w for w in dict.fromkeys(FI_REAL) if w not in set(en)]
    es_real = [
        w for w in dict.fromkeys(ES_REAL)
        if w not in set(en) and w not in set(fi_real)
    ]
    fi = fi_real + pseudo_words(
        FI_SYLLABLES, FI_SUFFIXES, seed=101, n=60, taken=en + fi_real + es_real
    )
    es = es_real + pseudo_words(
        ES_SYLLABLES, ES_SUFFIXES, seed=202, n=60,
        taken=en + fi_real + es_real + fi,
    )
    assert not set(en) & set(fi) and not set(en) & set(es) and not set(fi) & set(es)
    return en, sorted(fi), sorted(es)


def merge_word(syms, pair):
    out = []
    i = 0
    while i < len(syms):
        if i + 1 < len(syms) and (syms[i], syms[i + 1]) == pair:
            out.append(syms[i] + syms[i + 1])
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return tuple(out)


def train_bpe(weighted_words, n_merges):
    """Greedy pair-frequency merges; ties pick the lexicographically
    smallest pair so reruns are identical."""
    corpus = Counter()
    for word, weight in weighted_words:
        corpus[tuple(word)] += weight
    merges = []
    for _ in range(n_merges):
        pairs = Counter()
        for syms, weight in corpus.items():
            for a, b in zip(syms, syms[1:]):
                pairs[(a, b)] += weight
        if not pairs:
            break
        top = max(pairs.values())
        if top < 2:
            break
        best = min(p for p, c in pairs.items() if c == top)
        merges.append(best)
        corpus = Counter({merge_word(syms, best): w for syms, w in corpus.items()})
    chars = sorted({ch for word, _ in weighted_words for ch in word})
    vocab = {}
    for ch in chars:
        vocab[ch] = len(vocab)
    for a, b in merges:
        token = a + b
        if token not in vocab:
            vocab[token] = len(vocab)
    return vocab, merges


def write_tokenizer(root, name, vocab, merges):
    d = root / "tokenizers" / name
    d.mkdir(parents=True, exist_ok=True)
    with (d / "vocab.json").open("w", encoding="utf-8") as fh:
        json.dump(vocab, fh, ensure_ascii=False, indent=0, sort_keys=False)
        fh.write("\n")
    with (d / "merges.txt").open("w", encoding="utf-8") as fh:
        fh.write(f"# toy merges: {name}\n")
        for a, b in merges:
            fh.write(f"{a} {b}\n")


DEMO_MESSAGES = [
    Message(
        id="demo-001", community="r/helsinkiexpats", flair="Housing",
        text="Looking for a one bedroom apartment near the center, any advice on rent levels?",
        label=0, topic_id=0,
    ),
    Message(
        id="demo-002", community="r/helsinkiexpats", flair="Health",
        text="I finally got an appointment at the terveyskeskus and the lääkäri was really helpful.",
        label=1, topic_id=1,
    ),
    Message(
        id="demo-003", community="r/helsinkiexpats", flair="Language",
        text="My coworkers said nähdään huomenna when leaving. They switch languages all the time.",
        label=1, topic_id=2,
    ),
    Message(
        id="demo-004", community="r/helsinkiexpats", flair="Language",
        text="Kiitos paljon avusta, tämä kaupunki tuntuu jo kodilta ja kieli sujuu paremmin.",
        label=0, topic_id=2,
    ),
    Message(
        id="demo-005", community="r/helsinkiexpats", flair="Misc",
        text="Great weekend at the mökki!",
        label=1, topic_id=None,
    ),
    Message(
        id="demo-006", community="r/helsinkiexpats", flair="Housing",
        text="The vuokra went up again this year so I am moving to a smaller place in the winter.",
        label=1, topic_id=0,
    ),
]

ANNOTATIONS_CSV = """id,annotator_a,annotator_b
demo-001,1,1
demo-002,0,0
demo-003,1,0
demo-004,1,1
"""

DEMO_CONFIG = """# Demo pipeline config; paths are relative to this file.
seed = 42

[resources]
english_vocab = "../resources/tokenizers/english/vocab.json"
english_merges = "../resources/tokenizers/english/merges.txt"
local_vocab = "../resources/tokenizers/finnish/vocab.json"
local_merges = "../resources/tokenizers/finnish/merges.txt"
multilingual_vocab = "../resources/tokenizers/multilingual/vocab.json"
multilingual_merges = "../resources/tokenizers/multilingual/merges.txt"
english_langmodel = "../resources/langmodels/english.json"
local_langmodel = "../resources/langmodels/finnish.json"
english_tag = "en"
local_tag = "fi"
stub_soft_label = 0.5

[io]
output_dir = "../runs/demo"

[synth]
n_messages = 400
mix_rate = 0.3
english_lexicon = "../resources/lexicons/english.txt"
local_lexicon = "../resources/lexicons/finnish.txt"
local_tag = "fi"

[train]
algorithm = "random_forest"
n_trees = 100
max_depth = 8

[crossval]
k = 5
"""


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--root", default=str(Path(__file__).resolve().parent.parent),
        help="repository root to write resources/ and configs/ under",
    )
    args = parser.parse_args()
    root = Path(args.root)
    res = root / "resources"
    (res / "lexicons").mkdir(parents=True, exist_ok=True)
    (res / "langmodels").mkdir(parents=True, exist_ok=True)
    (res / "examples").mkdir(parents=True, exist_ok=True)
    (root / "configs").mkdir(parents=True, exist_ok=True)

    en, fi, es = build_lexicons()
    for name, words in (("english", en), ("finnish", fi), ("spanish", es)):
        with (res / "lexicons" / f"{name}.txt").open("w", encoding="utf-8") as fh:
            fh.write(f"# toy {name} lexicon\n")
            fh.writelines(w + "\n" for w in words)

    real = {"english": set(EN_WORDS), "finnish": set(FI_REAL), "spanish": set(ES_REAL)}
    weighted = {
        name: [(w, 4 if w in real[name] else 1) for w in words]
        for name, words in (("english", en), ("finnish", fi), ("spanish", es))
    }
    for name in ("english", "finnish", "spanish"):
        vocab, merges = train_bpe(weighted[name], n_merges=300)
        write_tokenizer(res, name, vocab, merges)
        print(f"{name}: {len(vocab)} tokens, {len(merges)} merges")
    multi = weighted["english"] + weighted["finnish"] + weighted["spanish"]
    vocab, merges = train_bpe(multi, n_merges=450)
    write_tokenizer(res, "multilingual", vocab, merges)
    print(f"multilingual: {len(vocab)} tokens, {len(merges)} merges")

    for name, tag, words in (
        ("english", "en", en), ("finnish", "fi", fi), ("spanish", "es", es)
    ):
        model = train_ngram_model(words, language=tag, n_range=(1, 5))
        model.save(res / "langmodels" / f"{name}.json")

    save_jsonl(Dataset(tuple(DEMO_MESSAGES)), res / "examples" / "messages.jsonl")
    (res / "examples" / "annotations.csv").write_text(ANNOTATIONS_CSV, encoding="utf-8")
    (root / "configs" / "demo.toml").write_text(DEMO_CONFIG, encoding="utf-8")
    print(f"resources written under {res}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
