"""Regenerate the bundled 200-line synthetic access log.

Run from the repository root:  python3 scripts/make_fixture.py
The output is committed; tests assert counts enumerated from it by hand.
"""

import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "usageprofiles" / "data" / "fixture_access.log"
TZ = timezone(timedelta(hours=5, minutes=30))
START = datetime(2011, 2, 1, 9, 0, 0, tzinfo=TZ)

PROFILES = {
    "academics": ["/index.html", "/academics/cse.html", "/academics/ece.html", "/academics/syllabus.html"],
    "admissions": ["/index.html", "/admissions/apply.html", "/admissions/fees.html", "/admissions/form.php"],
    "faculty": ["/faculty/list.html", "/faculty/research.html", "/faculty/publications.html"],
}
ASSETS = ["/img/logo.gif", "/img/banner.png", "/css/site.css", "/js/menu.js", "/favicon.ico"]

USERS = [
    ("10.0.0.1", "Mozilla/5.0 (Windows NT 6.1) Firefox/3.6"),
    ("10.0.0.1", "Mozilla/5.0 (X11; Linux i686) Chrome/9.0"),
    ("10.0.0.2", "Mozilla/5.0 (Macintosh) Safari/533.19"),
    ("10.0.0.3", "Opera/9.80 (Windows NT 5.1) Presto/2.7"),
    ("192.168.1.7", "Mozilla/4.0 (compatible; MSIE 8.0)"),
    ("172.16.0.5", None),  # Common-format lines, no agent
]
ROBOT = ("66.249.66.1", "Googlebot/2.1 (+http://www.google.com/bot.html)")


def fmt(ip, ts, method, path, status, size, agent, referrer="-"):
    stamp = ts.strftime("%d/%b/%Y:%H:%M:%S %z")
    base = f'{ip} - - [{stamp}] "{method} {path} HTTP/1.1" {status} {size}'
    if agent is None:
        return base
    return f'{base} "{referrer}" "{agent}"'


def main():
    rng = random.Random(20110201)
    events = []  # (ts, order, line)
    order = 0
    day = 0
    for ui, (ip, agent) in enumerate(USERS):
        for s in range(5):
            profile = list(PROFILES)[(ui + s) % 3]
            t = START + timedelta(days=day % 8, hours=ui, minutes=70 * s)
            day += 1
            pages = PROFILES[profile][: 2 + rng.randrange(len(PROFILES[profile]) - 1)]
            for pi, page in enumerate(pages):
                method = "POST" if page.endswith(".php") else "GET"
                events.append((t, order, fmt(ip, t, method, page, 200, 1000 + 37 * pi, agent)))
                order += 1
                if pi == 0:
                    asset = ASSETS[rng.randrange(len(ASSETS))]
                    events.append((t, order, fmt(ip, t, "GET", asset, 200, 512, agent)))
                    order += 1
                t += timedelta(minutes=1 + rng.randrange(5))
            if s == 1:
                events.append((t, order, fmt(ip, t, "GET", "/missing.html", 404, "-", agent)))
                order += 1
            if s == 2:
                events.append((t, order, fmt(ip, t, "HEAD", "/index.html", 200, "-", agent)))
                order += 1
    # Crafted gaps for one user: 30 min exactly (same session), then 31 min (split).
    ip, agent = "10.0.0.4", "Mozilla/5.0 (Windows NT 6.1) Firefox/3.6"
    t = START + timedelta(days=3, hours=14)
    for page, gap in [("/index.html", 0), ("/academics/cse.html", 30), ("/academics/ece.html", 31)]:
        t += timedelta(minutes=gap)
        events.append((t, order, fmt(ip, t, "GET", page, 304, "-", agent)))
        order += 1
    t = START + timedelta(days=2, hours=3)
    while len(events) < 196:
        path = ["/index.html", "/academics/cse.html", "/robots.txt"][len(events) % 3]
        events.append((t, order, fmt(*ROBOT[:1], t, "GET", path, 200, 77, ROBOT[1])))
        order += 1
        t += timedelta(seconds=20)
    events.sort()
    lines = [e[2] for e in events]
    assert len(lines) == 196, len(lines)
    malformed = [
        "garbage without quotes",
        '10.0.0.9 - - [32/Feb/2011:10:00:00 +0530] "GET /index.html HTTP/1.1" 200 10',
        '10.0.0.9 - - [01/Feb/2011:10:00:00 +0530] "GET /index.html HTTP/1.1" 999 10',
        "",
    ]
    for pos, bad in zip((10, 60, 120, 199), malformed):
        lines.insert(pos, bad)
    OUT.write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
