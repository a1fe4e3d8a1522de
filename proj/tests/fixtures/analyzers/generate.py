#!/usr/bin/env python3
"""Writes the synthetic labeled corpora used by the analyzer tests.

Output is deterministic for a given seed; rerun after editing vocabularies.
"""
import json
import random
from pathlib import Path

HERE = Path(__file__).parent

TOPICS = {
    "SPORT": "nogomet utakmica gol momčad trener prvenstvo liga igrač stadion navijač rezultat poluvrijeme sudac "
             "reprezentacija klub pobjeda poraz kup napadač vratar rukomet košarka tenis turnir medalja",
    "HOBBY AND PERSONAL INTEREST": "hobi kolekcija vrt sadnja recept kuhanje pletenje ribolov planinarenje "
             "fotografija marka zbirka uradi sam modelarstvo akvarij ljubimac pas mačka igračka zagonetka",
    "POLITICS": "vlada sabor ministar stranka izbori premijer oporba koalicija zakon glasanje zastupnik predsjednik "
             "kampanja mandat referendum birač politika proračun reforma saborski",
    "CRIME, LAW AND JUSTICE": "policija uhićenje sud optužnica presuda kazna zatvor odvjetnik tužitelj kazneno "
             "djelo istraga osumnjičenik pljačka prijevara svjedok sudac ročište pritvor krađa",
    "ECONOMY, BUSINESS AND FINANCE": "tvrtka dionica burza inflacija banka kredit investicija tržište prihod dobit "
             "gospodarstvo izvoz uvoz kamata euro poslovanje uprava dividenda poduzetnik porez",
    "DISASTER, ACCIDENT AND EMERGENCY INCIDENT": "nesreća požar potres poplava vatrogasac spašavanje ozlijeđen "
             "sudar prometna hitna evakuacija šteta stradao urušavanje eksplozija lavina olujni",
    "HEALTH": "bolnica liječnik pacijent bolest cjepivo lijek zdravlje terapija virus simptom operacija "
             "medicinska sestra epidemija dijagnoza kardiolog prehrana infekcija ambulanta",
    "ARTS, CULTURE, ENTERTAINMENT AND MEDIA": "koncert film kazalište izložba glazba pjevač glumac redatelj festival "
             "album knjiga roman galerija premijera umjetnik televizija serija nagrada pozornica",
    "CONFLICTS, WAR AND PEACE": "rat vojska granata primirje napad vojnik bojišnica izbjeglica sukob mirovni "
             "pregovori tenk ofenziva okupacija oružje raketa bombardiranje savezništvo",
    "SCIENCE AND TECHNOLOGY": "znanstvenik istraživanje magnet struja izum laboratorij fizika tehnologija robot "
             "računalo softver eksperiment svemir satelit elektricitet otkriće patent čip",
    "ENVIRONMENT": "okoliš zagađenje klimatske promjene emisija reciklaža otpad priroda šuma bioraznolikost "
             "ekologija park obnovljivi izvori plastika more zaštita vrsta",
    "EDUCATION": "škola učenik nastavnik fakultet student ispit matura sveučilište obrazovanje razred kurikulum "
             "profesor upis stipendija diploma predavanje vrtić",
    "WEATHER": "vrijeme kiša snijeg temperatura prognoza sunce oblačno vjetar bura jugo toplinski val mraz "
             "oborine meteorolog upozorenje magla tuča",
    "RELIGION": "crkva vjernik misa biskup papa svećenik blagdan molitva župa hodočašće vjera samostan "
             "katedrala propovijed sakrament uskrs božić",
    "LIFESTYLE AND LEISURE": "putovanje odmor moda ljepota restoran kafić trend dizajn interijer wellness "
             "plaža ljetovanje stil odjeća kozmetika vikend izlet",
    "LABOUR": "radnik sindikat plaća štrajk zaposlenje nezaposlenost poslodavac ugovor mirovina otkaz "
             "kolektivni prosvjed radno mjesto minimalac zavod sati",
    "SOCIETY": "društvo udruga volonter obitelj zajednica siromaštvo demografija iseljavanje građanin "
             "solidarnost humanitarni mladi umirovljenik socijalna jednakost",
}

FILLER = ("je su bio bila bilo da se na u za od do kod prema ali i a te koji koja koje što kako kada gdje "
          "danas jučer sutra godina dan tjedan mjesec grad zemlja ljudi vijest izjava prema navodima "
          "rekao rekla kazao dodao također još već samo vrlo više manje novi nova novo veliki velika").split()

LOW_QUALITY = ("horoskop ovan bik blizanci rak lav djevica vaga škorpion strijelac jarac vodenjak ribe zvijezde "
               "galerija fotografije pogledajte slike kolumna mišljenje smatram osobno kviz nagradna igra "
               "klikni pogledaj video viralno").split()


def sentence(rng, words, n):
    picked = [rng.choice(words) for _ in range(n)]
    return " ".join(picked).capitalize() + "."


def topic_article(rng, labels, length):
    vocab = []
    for label in labels:
        vocab += TOPICS[label].split()
    # Topic-word density varies so that sparse, natural-looking articles are covered.
    density = rng.uniform(0.15, 0.6)
    words = []
    while len(words) < length:
        words.append(rng.choice(vocab) if rng.random() < density else rng.choice(FILLER))
    title = " ".join(rng.choice(vocab) for _ in range(5)).capitalize()
    body = " ".join(sentence(rng, words[i:i + 12], 12) for i in range(0, len(words), 12))
    return title, body


def write_topics(rng):
    labels = list(TOPICS)
    for name, per_label in (("topics_train.jsonl", 40), ("topics_heldout.jsonl", 10)):
        rows = []
        for label in labels:
            for _ in range(per_label):
                chosen = [label]
                if rng.random() < 0.25:
                    other = rng.choice(labels)
                    if other != label:
                        chosen.append(other)
                title, body = topic_article(rng, chosen, rng.randint(60, 150))
                rows.append({"title": title, "body": body, "labels": chosen})
        rng.shuffle(rows)
        with open(HERE / name, "w", encoding="utf-8") as f:
            for r in rows:
                f.write(json.dumps(r, ensure_ascii=False) + "\n")


def quality_article(rng, low, length):
    if low:
        vocab = LOW_QUALITY
        title = " ".join(rng.choice(vocab) for _ in range(4)).capitalize()
    else:
        label = rng.choice(list(TOPICS))
        return topic_article(rng, [label], length)
    words = [rng.choice(vocab) if rng.random() < 0.6 else rng.choice(FILLER) for _ in range(length)]
    body = " ".join(sentence(rng, words[i:i + 10], 10) for i in range(0, len(words), 10))
    return title, body


def write_quality(rng):
    rows = []
    for _ in range(300):
        low = rng.random() < 0.4
        title, body = quality_article(rng, low, rng.randint(60, 200))
        rows.append({"title": title, "body": body, "low_quality": low})
    with open(HERE / "quality_train.jsonl", "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")

    # 1000 articles: 60 too short, 58 low-quality by content, 882 regular.
    rows = []
    for _ in range(60):
        title, body = topic_article(rng, [rng.choice(list(TOPICS))], rng.randint(5, 25))
        body = body.split(".")[0] + "."
        rows.append({"title": title, "body": body, "low_quality": True})
    for _ in range(58):
        title, body = quality_article(rng, True, rng.randint(80, 200))
        rows.append({"title": title, "body": body, "low_quality": True})
    for _ in range(882):
        title, body = quality_article(rng, False, rng.randint(80, 200))
        rows.append({"title": title, "body": body, "low_quality": False})
    rng.shuffle(rows)
    with open(HERE / "quality_corpus.jsonl", "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    rng = random.Random(11)
    write_topics(rng)
    write_quality(rng)


if __name__ == "__main__":
    main()
