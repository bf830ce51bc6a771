"""The Q&A platform end to end, in-process: seed questions, a participant
asking and answering, moderation, meter ingest, and the audit endpoint.

Run:  python3 demos/05_platform_walkthrough.py
"""
import csv
import random
import tempfile
from datetime import datetime, timedelta, timezone
from pathlib import Path

from fastapi.testclient import TestClient

from crowdenergy.api import create_app
from crowdenergy.store import Store

root = Path(tempfile.mkdtemp())
store = Store(root / "store")
store.ensure_seed_questions()
client = TestClient(create_app(store))

print("fresh store:", client.get("/api/stats").json())

users = [client.post("/api/participants").json()["id"] for _ in range(8)]
asker = users[0]
q = client.post("/api/questions", json={
    "author": str(asker),
    "text": "Do you charge an electric vehicle at home?",
    "qtype": "yes_no",
}).json()
print(f"\nuser {asker} asked {q['id']} -> status {q['status']}")
client.post(f"/api/questions/{q['id']}/moderate", json={"decision": "approve"})
print("moderator approved it")

rng = random.Random(0)
for u in users:
    queue = client.get("/api/questions/next", params={"user": u, "limit": 20}).json()
    for card in queue["questions"]:
        if card["qtype"] == "likert5":
            value = rng.randint(1, 5)
        elif card["qtype"] == "yes_no":
            value = rng.choice(["yes", "no"])
        else:
            value = rng.randint(0, 4)
        client.post("/api/answers", json={
            "user_id": u, "question_id": card["id"], "value": value,
        })
print("everyone worked through their answer queue")

meter = root / "meter.csv"
base = datetime(2026, 1, 1, tzinfo=timezone.utc)
with open(meter, "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["user_id", "interval_start", "kwh"])
    for u in users:
        for d in range(35):
            w.writerow([u, (base + timedelta(days=d)).isoformat(),
                        8 + 2 * u + rng.random() * 3])
print("meter ingest:", store.ingest_meter_csv(meter).stored, "daily readings")

print("refresh:", client.post("/api/model/refresh", params={"wait": "true"}).json())
audit = client.get(f"/api/users/{asker}/audit").json()
print(f"\naudit for user {asker}: predicted deviation "
      f"{audit['predicted_deviation_kwh']:+.1f} kWh")
for e in audit["entries"]:
    print(f"  {e['contribution_kwh']:+8.2f}  {e['question_id']:<4} {e['text'][:50]}")
print("\nfinal stats:", client.get("/api/stats").json())
