#!/usr/bin/env python3
"""Writes the extraction fixture corpus: one .html page and one .json label
per case. Labels are written by hand below; rerun after editing a case."""
import json
import pathlib

HERE = pathlib.Path(__file__).parent
OUTLET = "https://www.dnevnik-test.hr"

CASES = []


def case(name, url, html, title, body, published_at=None, absent=(), links=None):
    CASES.append(dict(name=name, url=OUTLET + url, html=html, title=title, body=body,
                      published_at=published_at, absent=list(absent), links=links))


P1 = "Vlada je u četvrtak usvojila novi zakon o obrazovanju, koji stupa na snagu idućeg mjeseca."
P2 = "Ministar je rekao da će reforma obuhvatiti sve osnovne škole, uključujući i one na otocima."
P3 = "Oporba je najavila da će zatražiti ustavnu ocjenu pojedinih odredbi, tvrdeći da nisu usklađene s ustavom."
P4 = "Sindikati su pozdravili povećanje plaća, ali upozoravaju na manjak nastavnika u ruralnim sredinama."
C1 = "Ovo je sramota, tko je ovo uopće napisao i zašto ovako loše"
C2 = "Slažem se s prethodnim komentarom, potpuno neozbiljan članak"
NAV = ["Naslovnica", "Vijesti", "Sport", "Kultura", "Zabava"]


def nav():
    items = "".join(f'<li><a href="/{n.lower()}/">{n}</a></li>' for n in NAV)
    return f'<nav class="main-nav"><ul>{items}</ul></nav>'


def comments(*texts):
    body = "".join(f'<div class="comment"><p>{t}</p></div>' for t in texts)
    return f'<div id="comments" class="comments-section"><h3>Komentari</h3>{body}</div>'


case("minimal_article", "/vijesti/zakon-1.html",
     f"<html><head><title>Zakon</title></head><body><article><p>{P1}</p><p>{P2}</p></article></body></html>",
     "Zakon", f"{P1} {P2}")

case("article_with_comments", "/vijesti/zakon-2.html",
     f"""<!DOCTYPE html><html><head><title>Portal | Zakon</title></head><body>{nav()}
<div class="content"><h1>Novi zakon o obrazovanju</h1>
<div class="article-body"><p>{P1}</p><p>{P2}</p><p>{P3}</p></div>
{comments(C1, C2)}</div></body></html>""",
     "Novi zakon o obrazovanju", f"{P1} {P2} {P3}", absent=[C1, C2, "Komentari"])

case("og_title_and_meta_date", "/vijesti/zakon-3.html",
     f"""<html><head><meta property="og:title" content="Zakon usvojen &amp; objavljen">
<meta property="article:published_time" content="2020-05-01T10:00:00Z"><title>Site</title></head>
<body><h1>Naslov u h1</h1><article><p>{P1}</p></article></body></html>""",
     "Zakon usvojen & objavljen", P1, published_at="2020-05-01T10:00:00Z")

case("sidebar_and_ads", "/vijesti/zakon-4.html",
     f"""<html><body><div id="wrap"><div class="main"><h1>Reforma škola</h1>
<p>{P1}</p><p>{P2}</p><p>{P4}</p></div>
<div class="sidebar"><p>Najčitanije danas: pogledajte što se dogodilo na utakmici, nevjerojatno.</p></div>
<div class="ad banner"><p>Kupite novi automobil po najpovoljnijoj cijeni, samo ovaj tjedan kod nas.</p></div>
</div></body></html>""",
     "Reforma škola", f"{P1} {P2} {P4}",
     absent=["Najčitanije danas", "Kupite novi automobil"])

case("time_element_date", "/vijesti/zakon-5.html",
     f"""<html><body><header class="site-header"><p>Portal za vijesti iz cijele Hrvatske, svaki dan.</p></header>
<main><h1>Plaće rastu</h1><time datetime="2021-03-15T08:30:00+01:00">15. ožujka</time>
<p>{P4}</p><p>{P2}</p></main></body></html>""",
     "Plaće rastu", f"{P4} {P2}", published_at="2021-03-15T07:30:00Z",
     absent=["Portal za vijesti iz cijele Hrvatske"])

case("json_ld_date_and_headline", "/vijesti/zakon-6.html",
     f"""<html><head><script type="application/ld+json">
{{"@context":"https://schema.org","@graph":[{{"@type":"WebPage"}},{{"@type":"NewsArticle","headline":"Ustavna ocjena","datePublished":"2022-11-02T12:00:00+00:00"}}]}}
</script><title>Naslov stranice</title></head><body><article><h1>Drugi naslov</h1><p>{P3}</p></article></body></html>""",
     "Ustavna ocjena", P3, published_at="2022-11-02T12:00:00Z")

case("url_date_fallback", "/2019/07/04/reforma.html",
     f"<html><head><title>Reforma</title></head><body><div class='story'><p>{P2}</p><p>{P3}</p></div></body></html>",
     "Reforma", f"{P2} {P3}", published_at="2019-07-04T00:00:00Z")

case("title_only_from_title_tag", "/vijesti/zakon-8.html",
     f"<html><head><title>  Samo   naslov  </title></head><body><div><p>{P1}</p></div></body></html>",
     "Samo naslov", P1)

case("entities_and_numeric_refs", "/vijesti/zakon-9.html",
     """<html><body><h1>&#268;lanak o &#x17E;upaniji</h1><article>
<p>Predsjednik &#x17E;upanije rekao je &bdquo;nema odustajanja&ldquo; &ndash; radovi po&#269;inju u ponedjeljak.</p>
<p>Tro&scaron;kovi iznose 2&nbsp;milijuna eura, &scaron;to je vi&scaron;e od plana.</p></article></body></html>""",
     "Članak o županiji",
     "Predsjednik županije rekao je „nema odustajanja“ – radovi počinju u ponedjeljak. "
     "Troškovi iznose 2 milijuna eura, što je više od plana.")

case("nfkc_ligatures_and_fullwidth", "/vijesti/zakon-10.html",
     "<html><body><h1>Proﬁl ＡＢＣ</h1><article><p>Ovaj ﬁlm traje 90 minuta i prikazuje ＡＢＣ kompaniju, a snimljen je u Splitu.</p></article></body></html>",
     "Profil ABC", "Ovaj film traje 90 minuta i prikazuje ABC kompaniju, a snimljen je u Splitu.")

case("unclosed_paragraphs", "/vijesti/zakon-11.html",
     f"<HTML><BODY><H1>Bez zatvaranja</H1><DIV CLASS=text><P>{P1}<P>{P2}<P>{P4}</DIV></BODY></HTML>",
     "Bez zatvaranja", f"{P1} {P2} {P4}")

case("script_and_style_ignored", "/vijesti/zakon-12.html",
     f"""<html><head><style>p {{ color: red }} .x:before {{ content: "<p>css</p>" }}</style></head><body>
<script>var html = "<p>Ovo je skripta koja se ne smije pojaviti u tijelu članka.</p>";</script>
<h1>Skripte</h1><article><p>{P3}</p><script>document.write('<p>dinamički</p>')</script><p>{P4}</p></article></body></html>""",
     "Skripte", f"{P3} {P4}", absent=["skripta koja se ne smije", "dinamički", "css"])

case("read_also_link_paragraphs", "/vijesti/zakon-13.html",
     f"""<html><body><h1>Povezano</h1><div class="entry"><p>{P1}</p>
<p><a href="/vijesti/drugi-clanak-1.html">Pročitajte i: ministar najavio nove mjere za škole</a></p>
<p>{P2}</p></div></body></html>""",
     "Povezano", f"{P1} {P2}", absent=["Pročitajte i"],
     links=[OUTLET + "/vijesti/drugi-clanak-1.html"])

case("related_and_share_blocks", "/vijesti/zakon-14.html",
     f"""<html><body><h1>Dijeljenje</h1><div class="post"><p>{P2}</p><p>{P3}</p>
<div class="share-buttons"><p>Podijelite ovaj članak s prijateljima na društvenim mrežama odmah.</p></div>
<div class="related-articles"><p>Također bi vas moglo zanimati: deset savjeta za bolji san i zdravlje.</p></div>
</div></body></html>""",
     "Dijeljenje", f"{P2} {P3}", absent=["Podijelite ovaj članak", "Također bi vas moglo zanimati"])

case("hidden_and_display_none", "/vijesti/zakon-15.html",
     f"""<html><body><h1>Skriveno</h1><article><p>{P1}</p>
<div style="display: none"><p>Ovaj odlomak je skriven i ne smije biti u tijelu članka uopće.</p></div>
<div hidden><p>I ovaj odlomak je skriven atributom, pa ga ekstraktor preskače.</p></div>
<p>{P4}</p></article></body></html>""",
     "Skriveno", f"{P1} {P4}", absent=["skriven"])

case("footer_and_cookie_banner", "/vijesti/zakon-16.html",
     f"""<html><body><div class="cookie-notice"><p>Ova stranica koristi kolačiće kako bi poboljšala vaše iskustvo.</p></div>
<h1>Kolačići</h1><section class="article"><p>{P3}</p><p>{P1}</p></section>
<footer><p>Sva prava pridržana, Portal d.o.o., Zagreb, Hrvatska, 2024. godine.</p></footer></body></html>""",
     "Kolačići", f"{P3} {P1}", absent=["kolačiće", "Sva prava pridržana"])

case("br_inside_paragraph_and_nbsp", "/vijesti/zakon-17.html",
     "<html><body><h1>Prijelomi</h1><article><p>Prvi redak teksta u članku o prometu,<br>drugi redak   s razmacima.</p></article></body></html>",
     "Prijelomi", "Prvi redak teksta u članku o prometu, drugi redak s razmacima.")

case("split_body_sibling_containers", "/vijesti/zakon-18.html",
     f"""<html><body><h1>Dva dijela</h1><div class="story-wrapper">
<div class="part"><p>{P1}</p><p>{P2}</p></div>
<div class="part"><p>{P3}</p><p>{P4}</p></div>
<div class="tags"><p>Oznake: obrazovanje, zakon, vlada, reforma, škole</p></div></div></body></html>""",
     "Dva dijela", f"{P1} {P2} {P3} {P4}", absent=["Oznake"])

case("article_with_nested_body", "/vijesti/zakon-19.html",
     f"""<html><body>{nav()}<article><header><h1>Ugniježđeno</h1><p class="lead">Kratki uvod.</p></header>
<div class="text"><p>{P2}</p></div><div class="text2"><p>{P4}</p></div>
<aside><p>Ovo je bočni okvir s reklamom za novu knjigu koja izlazi uskoro.</p></aside></article></body></html>""",
     "Ugniježđeno", f"{P2} {P4}", absent=["bočni okvir", "Kratki uvod", "Naslovnica"])

case("itemprop_article_body_and_date", "/vijesti/zakon-20.html",
     f"""<html><body><h1>Mikropodaci</h1><span itemprop="datePublished" content="2023-01-09">9.1.2023.</span>
<div itemprop="articleBody"><div class="p-wrap"><p>{P3}</p></div><div class="p-wrap"><p>{P2}</p></div></div>
<div class="newsletter"><p>Prijavite se na naš newsletter i primajte vijesti svako jutro.</p></div></body></html>""",
     "Mikropodaci", f"{P3} {P2}", published_at="2023-01-09T00:00:00Z", absent=["newsletter", "Prijavite se"])

case("links_filtering", "/vijesti/zakon-21.html",
     f"""<html><head><base href="/vijesti/"></head><body><h1>Poveznice</h1>
<article><p>{P1}</p></article>
<ul><li><a href="clanak-a.html#komentari">A</a></li><li><a href="/vijesti/clanak-a.html">A again</a></li>
<li><a href="https://dnevnik-test.hr/sport/clanak-b.html?utm_source=x&amp;id=3">B</a></li>
<li><a href="https://drugi-portal.hr/x.html">Vanjski</a></li><li><a href="mailto:urednik@dnevnik-test.hr">Mail</a></li>
<li><a href="javascript:void(0)">JS</a></li></ul></body></html>""",
     "Poveznice", P1,
     links=[OUTLET + "/vijesti/clanak-a.html", "https://dnevnik-test.hr/sport/clanak-b.html?id=3"])

case("list_page_like_article", "/vijesti/zakon-22.html",
     f"""<html><body><h1>Popis</h1><div class="teaser-list">
<p><a href="/v/1.html">Prva vijest dana koja je vrlo zanimljiva svima</a></p>
<p><a href="/v/2.html">Druga vijest dana koja je također zanimljiva</a></p></div>
<div class="content"><p>{P4}</p></div></body></html>""",
     "Popis", P4, absent=["Prva vijest dana"])

case("malformed_markup", "/vijesti/zakon-23.html",
     f"""<html><body><h1>Pokvareno</b></h1><div class="body"><p>{P1}</span></p><p>{P3}<i>
</div></div></body>""",
     "Pokvareno", f"{P1} {P3}")


def main():
    for path in HERE.glob("*.html"):
        path.unlink()
    for path in HERE.glob("*.json"):
        path.unlink()
    for i, c in enumerate(CASES, 1):
        stem = f"{i:02d}_{c['name']}"
        (HERE / f"{stem}.html").write_text(c["html"], encoding="utf-8")
        label = {k: c[k] for k in ("url", "title", "body", "published_at", "absent")}
        if c["links"] is not None:
            label["links"] = c["links"]
        (HERE / f"{stem}.json").write_text(json.dumps(label, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(CASES)} cases")


if __name__ == "__main__":
    main()
