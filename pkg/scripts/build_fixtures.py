#!/usr/bin/env python3
"""Regenerate the committed test fixtures (deterministic, no randomness):

  tests/fixtures/gazetteer_200.tsv   200-row place-name gazetteer
  tests/fixtures/articles_20.jsonl   20-article corpus incl. boundary sentences
  tests/fixtures/sentences_50.jsonl  50 curated sentences for generation tests
"""

from __future__ import annotations

import json
from pathlib import Path

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

# name, country, admin1, admin2 -- GeoNames-style admin codes, some admin2 empty
GAZETTEER_ROWS = [
    # Poland (21)
    ("Krakow", "Poland", "12", "1261"),
    ("Warsaw", "Poland", "14", "1465"),
    ("Gdansk", "Poland", "22", "2261"),
    ("Wroclaw", "Poland", "02", "0264"),
    ("Poznan", "Poland", "30", "3064"),
    ("Lodz", "Poland", "10", "1061"),
    ("Lublin", "Poland", "06", "0663"),
    ("Katowice", "Poland", "24", "2469"),
    ("Szczecin", "Poland", "32", "3262"),
    ("Bydgoszcz", "Poland", "04", "0461"),
    ("Opole", "Poland", "16", "1661"),
    ("Rzeszow", "Poland", "18", "1863"),
    ("Bialystok", "Poland", "20", "2061"),
    ("Nysa", "Poland", "16", "1607"),
    ("Klodzko", "Poland", "02", "0208"),
    ("Glucholazy", "Poland", "16", "1607"),
    ("Stronie Slaskie", "Poland", "02", "0208"),
    ("Ladek-Zdroj", "Poland", "02", "0208"),
    ("Prudnik", "Poland", "16", "1610"),
    ("Brzeg", "Poland", "16", "1601"),
    ("Jelenia Gora", "Poland", "02", ""),
    # Vietnam (18)
    ("Hanoi", "Vietnam", "44", ""),
    ("Haiphong", "Vietnam", "13", ""),
    ("Da Nang", "Vietnam", "78", ""),
    ("Hue", "Vietnam", "66", ""),
    ("Can Tho", "Vietnam", "87", ""),
    ("Quang Ninh", "Vietnam", "30", ""),
    ("Ha Long", "Vietnam", "30", "3005"),
    ("Thai Nguyen", "Vietnam", "85", ""),
    ("Yen Bai", "Vietnam", "72", ""),
    ("Lao Cai", "Vietnam", "90", ""),
    ("Sapa", "Vietnam", "90", "9003"),
    ("Phu Tho", "Vietnam", "83", ""),
    ("Hai Duong", "Vietnam", "61", ""),
    ("Bac Giang", "Vietnam", "54", ""),
    ("Cao Bang", "Vietnam", "04", ""),
    ("Ninh Binh", "Vietnam", "18", ""),
    ("Nam Dinh", "Vietnam", "82", ""),
    ("Thanh Hoa", "Vietnam", "34", ""),
    # USA (23)
    ("New York", "USA", "NY", "061"),
    ("York", "USA", "PA", "133"),
    ("Buffalo", "USA", "NY", "029"),
    ("Albany", "USA", "NY", "001"),
    ("San Diego", "USA", "CA", "073"),
    ("Los Angeles", "USA", "CA", "037"),
    ("Sacramento", "USA", "CA", "067"),
    ("San Francisco", "USA", "CA", "075"),
    ("Houston", "USA", "TX", "201"),
    ("Austin", "USA", "TX", "453"),
    ("Dallas", "USA", "TX", "113"),
    ("Miami", "USA", "FL", "086"),
    ("Tampa", "USA", "FL", "057"),
    ("Tallahassee", "USA", "FL", "073"),
    ("Perry", "USA", "FL", "123"),
    ("Steinhatchee", "USA", "FL", "029"),
    ("Asheville", "USA", "NC", "021"),
    ("Charlotte", "USA", "NC", "119"),
    ("Boone", "USA", "NC", "189"),
    ("Springfield", "USA", "IL", "167"),
    ("Springfield", "USA", "MA", "013"),
    ("New Orleans", "USA", "LA", "071"),
    ("Phoenix", "USA", "AZ", "013"),
    # Romania (10)
    ("Bucharest", "Romania", "10", ""),
    ("Galati", "Romania", "18", ""),
    ("Vaslui", "Romania", "38", ""),
    ("Iasi", "Romania", "23", ""),
    ("Cluj-Napoca", "Romania", "13", ""),
    ("Timisoara", "Romania", "36", ""),
    ("Constanta", "Romania", "14", ""),
    ("Braila", "Romania", "09", ""),
    ("Tulcea", "Romania", "37", ""),
    ("Suceava", "Romania", "34", ""),
    # Germany (10)
    ("Berlin", "Germany", "16", ""),
    ("Munich", "Germany", "02", "09162"),
    ("Passau", "Germany", "02", "09275"),
    ("Regensburg", "Germany", "02", "09362"),
    ("Dresden", "Germany", "13", ""),
    ("Hamburg", "Germany", "04", ""),
    ("Cologne", "Germany", "07", ""),
    ("Frankfurt", "Germany", "05", ""),
    ("Stuttgart", "Germany", "01", ""),
    ("Nuremberg", "Germany", "02", "09564"),
    # France (12)
    ("Paris", "France", "11", "75"),
    ("Marseille", "France", "93", "13"),
    ("Lyon", "France", "84", "69"),
    ("Toulouse", "France", "76", "31"),
    ("Nice", "France", "93", "06"),
    ("Nantes", "France", "52", "44"),
    ("Brest", "France", "53", "29"),
    ("Quimper", "France", "53", "29"),
    ("Valence", "France", "84", "26"),
    ("Montpellier", "France", "76", "34"),
    ("Ajaccio", "France", "94", "2A"),
    ("Bastia", "France", "94", "2B"),
    # Norway (8)
    ("Oslo", "Norway", "12", ""),
    ("Bergen", "Norway", "46", ""),
    ("Trondheim", "Norway", "50", ""),
    ("Bodo", "Norway", "18", ""),
    ("Tromso", "Norway", "54", ""),
    ("Alesund", "Norway", "15", ""),
    ("Stavanger", "Norway", "11", ""),
    ("Drammen", "Norway", "30", ""),
    # Italy (10)
    ("Rome", "Italy", "07", "RM"),
    ("Milan", "Italy", "09", "MI"),
    ("Venice", "Italy", "20", "VE"),
    ("Bologna", "Italy", "05", "BO"),
    ("Genoa", "Italy", "08", "GE"),
    ("Florence", "Italy", "16", "FI"),
    ("Naples", "Italy", "04", "NA"),
    ("Turin", "Italy", "12", "TO"),
    ("Palermo", "Italy", "15", "PA"),
    ("Catania", "Italy", "15", "CT"),
    # Greece (8)
    ("Athens", "Greece", "ESYE31", ""),
    ("Thessaloniki", "Greece", "ESYE12", ""),
    ("Volos", "Greece", "ESYE14", ""),
    ("Larissa", "Greece", "ESYE14", ""),
    ("Karditsa", "Greece", "ESYE14", ""),
    ("Trikala", "Greece", "ESYE14", ""),
    ("Patras", "Greece", "ESYE23", ""),
    ("Kalamata", "Greece", "ESYE25", ""),
    # Brazil (8)
    ("Porto Alegre", "Brazil", "23", ""),
    ("Canoas", "Brazil", "23", ""),
    ("Sao Leopoldo", "Brazil", "23", ""),
    ("Rio de Janeiro", "Brazil", "21", ""),
    ("Sao Paulo", "Brazil", "27", ""),
    ("Belo Horizonte", "Brazil", "15", ""),
    ("Salvador", "Brazil", "05", ""),
    ("Recife", "Brazil", "30", ""),
    # UAE (6)
    ("Dubai", "UAE", "03", ""),
    ("Abu Dhabi", "UAE", "01", ""),
    ("Sharjah", "UAE", "06", ""),
    ("Ajman", "UAE", "02", ""),
    ("Fujairah", "UAE", "04", ""),
    ("Al Ain", "UAE", "01", ""),
    # India (8)
    ("Delhi", "India", "07", ""),
    ("New Delhi", "India", "07", ""),
    ("Mumbai", "India", "16", ""),
    ("Kolkata", "India", "28", ""),
    ("Chennai", "India", "25", ""),
    ("Jaipur", "India", "24", ""),
    ("Lucknow", "India", "36", ""),
    ("Nagpur", "India", "16", ""),
    # Australia (6)
    ("Cairns", "Australia", "04", ""),
    ("Brisbane", "Australia", "04", ""),
    ("Sydney", "Australia", "02", ""),
    ("Melbourne", "Australia", "07", ""),
    ("Townsville", "Australia", "04", ""),
    ("Port Douglas", "Australia", "04", ""),
    # Canada (6)
    ("Toronto", "Canada", "08", ""),
    ("Vancouver", "Canada", "02", ""),
    ("Montreal", "Canada", "10", ""),
    ("Ottawa", "Canada", "08", ""),
    ("Calgary", "Canada", "01", ""),
    ("Winnipeg", "Canada", "03", ""),
    # Austria (6)
    ("Vienna", "Austria", "09", ""),
    ("Linz", "Austria", "04", ""),
    ("Salzburg", "Austria", "05", ""),
    ("Graz", "Austria", "06", ""),
    ("Innsbruck", "Austria", "07", ""),
    ("Sankt Polten", "Austria", "03", ""),
    # China (6)
    ("Beijing", "China", "22", ""),
    ("Guangzhou", "China", "30", ""),
    ("Shenzhen", "China", "30", ""),
    ("Shaoguan", "China", "30", ""),
    ("Qingyuan", "China", "30", ""),
    ("Meizhou", "China", "30", ""),
    # Mexico (5)
    ("Acapulco", "Mexico", "12", ""),
    ("Mexico City", "Mexico", "09", ""),
    ("Guadalajara", "Mexico", "14", ""),
    ("Monterrey", "Mexico", "19", ""),
    ("Oaxaca", "Mexico", "20", ""),
    # Thailand (5)
    ("Bangkok", "Thailand", "40", ""),
    ("Chiang Mai", "Thailand", "02", ""),
    ("Phuket", "Thailand", "62", ""),
    ("Udon Thani", "Thailand", "76", ""),
    ("Khon Kaen", "Thailand", "22", ""),
    # Jamaica (4)
    ("Kingston", "Jamaica", "01", ""),
    ("Montego Bay", "Jamaica", "08", ""),
    ("Negril", "Jamaica", "10", ""),
    ("Ocho Rios", "Jamaica", "16", ""),
    # South Africa (5)
    ("Cape Town", "South Africa", "11", ""),
    ("Johannesburg", "South Africa", "06", ""),
    ("Durban", "South Africa", "02", ""),
    ("Pretoria", "South Africa", "09", ""),
    ("Gqeberha", "South Africa", "05", ""),
    # Scotland (6)
    ("Edinburgh", "Scotland", "SCT", "U8"),
    ("Glasgow", "Scotland", "SCT", "V2"),
    ("Aberdeen", "Scotland", "SCT", "T5"),
    ("Dundee", "Scotland", "SCT", "U4"),
    ("Inverness", "Scotland", "SCT", "V3"),
    ("Brechin", "Scotland", "SCT", "T6"),
    # Yemen (3)
    ("Aden", "Yemen", "24", ""),
    ("Mukalla", "Yemen", "04", ""),
    ("Al Ghaydah", "Yemen", "03", ""),
    # Morocco (3)
    ("Rabat", "Morocco", "04", ""),
    ("Casablanca", "Morocco", "06", ""),
    ("Marrakesh", "Morocco", "07", ""),
    # Switzerland (3)
    ("Zurich", "Switzerland", "ZH", ""),
    ("Geneva", "Switzerland", "GE", ""),
    ("Basel", "Switzerland", "BS", ""),
]


def exact(base: str, target: int) -> str:
    """Pad a period-terminated sentence with filler to an exact length."""
    assert base.endswith("."), base
    body = base[:-1]
    current = len(body) + 1
    if current > target:
        raise ValueError(f"base too long ({current} > {target}): {base!r}")
    pad = target - current
    if pad == 1:
        body += "x"
    elif pad > 1:
        body += " " + "x" * (pad - 1)
    sentence = body + "."
    assert len(sentence) == target, (len(sentence), target)
    return sentence


def build_gazetteer() -> None:
    assert len(GAZETTEER_ROWS) == 200, len(GAZETTEER_ROWS)
    lines = ["\t".join(row) for row in GAZETTEER_ROWS]
    (FIXTURES / "gazetteer_200.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


# sentences for the Poland Floods articles; "keep" means: in [30, 200] chars
# and mentions a gazetteer place registered under Poland
KEPT = [
    "Flood waters swept through Krakow overnight and forced road closures.",
    "Emergency crews in Wroclaw carried sandbags to the old town embankment.",
    "Residents of Opole watched the river climb toward the bridge deck.",
    "Rescue boats patrolled the flooded streets of Klodzko through the night.",
    "Power was restored to most of Nysa after two days of outages.",
    "Hundreds of volunteers in Gdansk reinforced the canal walls with sandbags.",
    "The mayor of Warsaw opened three shelters for displaced families.",
    "Farm fields around Brzeg stayed under water for a third straight day.",
    "Firefighters pumped basements dry across Bydgoszcz on Sunday morning.",
    "In Glucholazy the temporary bridge reopened to emergency traffic only.",
    "Officials in Prudnik estimated damage to schools at several million zloty.",
    "Trains between Katowice and the coast were suspended until further notice.",
]
SHORT = [
    "Rivers rose fast overnight.",
    "More rain is on the way.",
    "Sirens sounded at dawn.",
]
NO_LOCATION = [
    "Meteorologists expect another band of heavy rain across the region this weekend.",
    "Insurance assessors began tallying claims from the weekend storms on Monday.",
    "The national weather service extended its highest alert level by two days.",
]
LONG_BASE = (
    "Forecasters warned that saturated ground across the southern counties means "
    "any further rainfall will run straight into already swollen rivers, and they "
    "urged residents to follow official instructions."
)

# boundary sentences: lengths 29 / 30 / 200 / 201 exactly
B29 = "Nysa crews pumped water fast."
B30 = "Nysa crews pumped water again."
B200 = exact(
    "Officials in Krakow said flood defences along the river held overnight "
    "while volunteers filled sandbags and moved families to shelters, adding "
    "that water levels would stay dangerous for days.",
    200,
)
B201 = exact(
    "Officials in Krakow said flood defences along the river held overnight "
    "while volunteers filled sandbags and moved families to shelters, warning "
    "that water levels would stay dangerous for weeks.",
    201,
)


def build_articles() -> None:
    assert len(B29) == 29 and len(B30) == 30
    long_sentence = exact(LONG_BASE, 210)
    bodies = []
    # article 0 carries the four boundary sentences
    bodies.append(" ".join([B29, B30, B200, B201]))
    for i in range(18):
        parts = [
            KEPT[i % len(KEPT)],
            SHORT[i % len(SHORT)],
            NO_LOCATION[i % len(NO_LOCATION)],
            KEPT[(i + 5) % len(KEPT)],
        ]
        if i % 3 == 0:
            parts.append(long_sentence)
        bodies.append(" ".join(parts))
    bodies.append("")  # one empty-body article

    records = []
    for i, body in enumerate(bodies):
        published = None if i == 7 else f"2024-08-{(15 + i % 14):02d}T09:30:00+00:00"
        records.append(
            {
                "url": f"https://news.example.com/poland/{i}",
                "title": f"Flood report {i}",
                "body": body,
                "published": published,
                "event": "poland-floods",
                "query": "Poland Floods Poland relief weather",
            }
        )
    assert len(records) == 20
    with open(FIXTURES / "articles_20.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


SENTENCE_TEMPLATES = [
    "Flood waters swept through {p} after the typhoon made landfall on Saturday.",
    "Rescue teams in {p} moved hundreds of families to higher ground overnight.",
    "Officials in {p} reported widespread power outages and blocked mountain roads.",
    "Heavy rain battered {p} for a second day, pushing rivers past warning levels.",
    "Volunteers in {p} handed out food and drinking water to displaced residents.",
]
SENTENCE_PLACES = [
    "Hanoi", "Haiphong", "Da Nang", "Quang Ninh", "Ha Long",
    "Thai Nguyen", "Yen Bai", "Lao Cai", "Phu Tho", "Cao Bang",
]


def build_sentences() -> None:
    records = []
    for t_index, template in enumerate(SENTENCE_TEMPLATES):
        for p_index, place in enumerate(SENTENCE_PLACES):
            text = template.format(p=place)
            assert 30 <= len(text) <= 200, text
            records.append(
                {
                    "text": text,
                    "url": f"https://news.example.com/yagi/{t_index * 10 + p_index}",
                    "event": "typhoon-yagi",
                    "locations": [
                        {"name": place, "country": "Vietnam", "admin1": "", "admin2": ""}
                    ],
                }
            )
    assert len(records) == 50
    assert len({r["text"] for r in records}) == 50
    with open(FIXTURES / "sentences_50.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    build_gazetteer()
    build_articles()
    build_sentences()
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
