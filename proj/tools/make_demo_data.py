"""Writes the demo dataset (data/demo) loaded by `catalogctl import`."""

import hashlib
import json
import pathlib
import sys

DOMAINS = {
    "social media": ["social media"],
    "voice assistants": ["voice assistant", "smart speaker"],
}

# (domain, aspect, source, title, summary)
CARDS = [
    ("social media", "Economy", "Example Ledger", "Creator payouts shrink as ad rates fall",
     "smaller creators losing a steady income, because platform revenue sharing shifts with ad markets they cannot see or negotiate."),
    ("voice assistants", "Economy", "Example Ledger", "Call centres trim staff after assistant rollout",
     "job losses for phone support workers, because routine customer questions are now answered by automated voice agents."),
    ("social media", "Environment & Sustainability", "Green Wire", "Video feeds and the data centre boom",
     "rising electricity and water use in data centres, because autoplaying video feeds keep servers busy around the clock."),
    ("voice assistants", "Environment & Sustainability", "Green Wire", "Old smart speakers pile up in landfill",
     "more electronic waste, because speakers stop receiving updates and owners throw away devices that still work."),
    ("social media", "Equality & Justice", "Civic Desk", "Beauty filters favour lighter skin",
     "reinforced bias against darker-skinned users, because face filters nudge everyone towards a narrow and lighter beauty ideal."),
    ("voice assistants", "Equality & Justice", "Civic Desk", "Accents trip up speech recognition",
     "worse service for speakers with regional or non-native accents, because recognition models are trained mostly on a few dialects."),
    ("social media", "Information & Discourse", "Daily Circuit", "Outrage travels fastest",
     "faster spread of misleading posts, because ranking systems reward content that provokes strong reactions before it is checked."),
    ("voice assistants", "Information & Discourse", "Daily Circuit", "One answer, no sources",
     "a narrower view of contested topics, because assistants read out a single answer without showing where it came from."),
    ("social media", "Health & Well-being", "Clinic Notes", "Teens and the endless feed",
     "more anxiety and lost sleep among teenagers, because infinite scrolling makes it hard to stop at night."),
    ("voice assistants", "Health & Well-being", "Clinic Notes", "Medication reminders that go unheard",
     "missed doses for older adults, because reminder features fail silently when the device loses its connection."),
    ("social media", "Politics", "Capitol Byte", "Micro-targeted campaign ads",
     "voters seeing different promises from the same campaign, because political ads are targeted at small audiences that others never see."),
    ("voice assistants", "Politics", "Capitol Byte", "Assistants asked who to vote for",
     "quiet influence on undecided voters, because default answers about candidates depend on opaque ranking choices."),
    ("social media", "Power", "Market Watchers", "Platform rules change overnight",
     "small businesses depending on a few companies, because a single policy change can cut off their customers without appeal."),
    ("voice assistants", "Power", "Market Watchers", "Default shopping through one store",
     "less choice for shoppers, because voice orders are routed to the assistant maker's own store by default."),
    ("social media", "Security & Privacy", "Privacy Beat", "Location leaks from photo metadata",
     "users being tracked to their homes, because shared photos can reveal where they were taken."),
    ("voice assistants", "Security & Privacy", "Privacy Beat", "Recordings reviewed by contractors",
     "private conversations heard by strangers, because accidental activations are recorded and sent for human review."),
    ("social media", "User Experience & Entertainment", "Screen Time", "Feeds fill with recommended strangers",
     "people seeing fewer posts from friends, because recommendation feeds replace the accounts they chose to follow."),
    ("voice assistants", "User Experience & Entertainment", "Screen Time", "Ads creep into spoken answers",
     "frustration with everyday requests, because sponsored suggestions are inserted into answers to simple questions."),
    ("social media", "Social Norms & Relationships", "Family Post", "Group chats replace public posts",
     "friendships splitting into closed circles, because people move conversations into private groups that exclude others."),
    ("voice assistants", "Social Norms & Relationships", "Family Post", "Children bark orders at speakers",
     "children learning to speak rudely to others, because assistants respond to commands without any need for politeness."),
]


def sha16(s: str) -> str:
    return hashlib.sha256(s.encode()).hexdigest()[:16]


def main(out_dir: str) -> None:
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    articles, cards = [], []
    for n, (domain, aspect, source, title, summary) in enumerate(CARDS):
        slug = title.lower().replace(" ", "-").replace(",", "")
        url = f"https://demo.example.org/{n:02d}-{slug}"
        aid = "a_" + sha16(url)
        day = 1 + n
        articles.append({
            "id": aid, "canonical_url": url, "source": source, "title": title,
            "body": f"{title}. Demo article text.", "published_at": f"2023-06-{day:02d}",
            "fetched_at": "2023-07-01T00:00:00Z", "word_count": 5,
        })
        cards.append({
            "article_id": aid, "aspect": aspect, "created_at": f"2023-07-01T{n:02d}:00:00Z",
            "domain": domain, "id": "c_" + sha16(aid + "\x1f" + domain),
            "provenance": {"aspect_raw": aspect, "model": "demo", "prompt_hashes": {}, "provider": "demo"},
            "summary": summary,
        })
    sidecar = {
        "domains": [{"name": k, "keywords": v, "approved": True} for k, v in DOMAINS.items()],
        "articles": articles,
        "imports": [],
    }
    (out / "sidecar.json").write_text(json.dumps(sidecar, indent=1, sort_keys=True) + "\n")
    (out / "cards.jsonl").write_text(
        "".join(json.dumps(c, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n" for c in cards))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/demo")
