#!/usr/bin/env python3
"""Regenerate the bundled fixture corpus (transcripts.jsonl, articles.jsonl).

The corpus is small but exercises every corpus rule: operator introductions,
Q&A sections marked both by heading and by operator announcement, a
Q&A-only transcript, estimate boilerplate, duplicate bullets, article
merging inside the one-day window, and articles outside it.
"""
import json
from pathlib import Path

HERE = Path(__file__).parent

transcripts = []
articles = []


def transcript(source_id, code, date, blocks):
    transcripts.append(
        {
            "source_id": source_id,
            "company_code": code,
            "event_date": date,
            "blocks": [{"speaker_role": r, "text": t} for r, t in blocks],
        }
    )


def article(source_id, code, date, body):
    articles.append(
        {
            "source_id": source_id,
            "company_code": code,
            "post_date": date,
            "body": body,
        }
    )


OPERATOR_INTRO = (
    "Good morning, and welcome to the earnings conference call. "
    "All participants will be in listen-only mode. "
    "Please note this event is being recorded."
)
QA_HEADING = ("Questions and Answers", "Operator instructions follow.")
QA_OPERATOR = (
    "Operator",
    "Thank you. We will now begin the question-and-answer session.",
)
ANALYST = ("Analyst", "Thanks for taking my question. Can you talk about the margin outlook?")

# Pair 1: the hallucination-detection source. Its prepared remarks state
# every value that the acceptance suite's machine-generated summary gets
# right, and none of the values it gets wrong.
transcript(
    "fct-2021q2",
    "FCT",
    "2021-08-03",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "Candor Technologies Inc. delivered a record second quarter. "
            "Our revenue in the second quarter rose 27 percent to $667 million, driven by strong volumes. "
            "Organic growth was broad-based across our fuel card and corporate payments lines. "
            "We signed several marquee clients and retention improved again this quarter.",
        ),
        (
            "CFO",
            "GAAP earnings per share for the second quarter was $2.30. "
            "Adjusted net income per diluted share was $3.15 in the quarter. "
            "For the third quarter, we expect adjusted earnings per share between $3.35 and $3.55. "
            "We now see full year adjusted earnings per share of $12.80 to $13.00. "
            "For the full year 2021, we are raising our revenue outlook to a range of $2.74 billion to $2.79 billion, up from our prior range of $2.705 billion to $2.791 billion. "
            "Free cash flow conversion remained excellent in the period.",
        ),
        QA_HEADING,
        ANALYST,
    ],
)
article(
    "fct-art-1",
    "FCT",
    "2021-08-03",
    "q2 revenue rose 27 percent to $667 million. "
    "q2 earnings per share $2.30. "
    "qtrly adjusted net income per diluted share $3.15. "
    "sees q3 adjusted earnings per share $3.35 to $3.55. "
    "sees fy adjusted earnings per share $12.80 to $13.00. "
    "sees fy revenue $2.74 billion to $2.79 billion. "
    "analysts polled expected $3.02 per share per refinitiv ibes data.",
)

# Pair 2: four uppercase bullets plus estimate boilerplate.
transcript(
    "apl-2022q2",
    "APL",
    "2022-04-28",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "We are proud to report quarterly earnings per share of $1.52. "
            "Total net sales reached $97.28 billion versus $89.58 billion reported last year. "
            "Handset revenue came in at $50.57 billion versus $47.94 billion reported last year. "
            "Services set another all-time record this quarter.",
        ),
        (
            "CFO",
            "The board of directors authorized an increase of $90 billion to the existing share repurchase program. "
            "We returned nearly $27 billion to shareholders during the quarter. "
            "Gross margin was 43.7% in the March quarter.",
        ),
        QA_OPERATOR,
        ANALYST,
    ],
)
article(
    "apl-art-1",
    "APL",
    "2022-04-28",
    "QUARTERLY EARNINGS PER SHARE $1.52. "
    "QUARTERLY TOTAL NET SALES $97.28 BILLION VERSUS $89.58 BILLION REPORTED LAST YEAR. "
    "BOARD OF DIRECTORS AUTHORIZED AN INCREASE OF $90 BILLION TO THE EXISTING SHARE REPURCHASE PROGRAM. "
    "QUARTERLY IPHONE REVENUE $50.57 BILLION VERSUS $47.94 BILLION REPORTED LAST YEAR. "
    "ANALYSTS EXPECTED EARNINGS OF $1.43 PER SHARE PER REFINITIV IBES DATA.",
)

# Pair 3: two partial articles on consecutive days sharing one bullet.
transcript(
    "brx-2021q4",
    "BRX",
    "2021-02-10",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "Fourth quarter net revenue grew 14 percent to $512 million. "
            "Same-store volumes were up 6.5% year over year. "
            "We opened 23 new locations during the quarter. "
            "Customer satisfaction scores hit a new high.",
        ),
        (
            "CFO",
            "Adjusted earnings per share was $1.07 for the fourth quarter. "
            "Free cash flow reached $98 million in the period. "
            "For fiscal 2022 we expect revenue of $2.1 billion to $2.2 billion. "
            "Net leverage ended the year at 2.4 times.",
        ),
        QA_HEADING,
        ANALYST,
    ],
)
article(
    "brx-art-1",
    "BRX",
    "2021-02-10",
    "q4 net revenue grew 14 percent to $512 million. "
    "q4 adjusted earnings per share $1.07. "
    "analysts expected $1.01 per share per refinitiv ibes data.",
)
article(
    "brx-art-2",
    "BRX",
    "2021-02-11",
    "q4 adjusted earnings per share $1.07. "
    "sees fy 2022 revenue $2.1 billion to $2.2 billion. "
    "quarterly free cash flow $98 million.",
)

# Pair 4: article posted the day after the event.
transcript(
    "cdt-2021q1",
    "CDT",
    "2021-05-06",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "First quarter bookings rose 31 percent to $845 million. "
            "Subscription revenue was $390 million, up 24 percent. "
            "Our pipeline for the second half looks healthy. "
            "We welcomed 210 new enterprise customers.",
        ),
        (
            "CFO",
            "Non-GAAP earnings per share was $0.87 in the first quarter. "
            "Operating margin expanded to 18.5% from 15.2% a year ago. "
            "We ended the quarter with $1.3 billion in cash and equivalents.",
        ),
        QA_OPERATOR,
        ANALYST,
    ],
)
article(
    "cdt-art-1",
    "CDT",
    "2021-05-07",
    "q1 bookings rose 31 percent to $845 million. "
    "q1 subscription revenue $390 million, up 24 percent. "
    "q1 non-gaap earnings per share $0.87. "
    "pipeline for the second half looks healthy.",
)

# Pair 5: same-day article plus an off-window article two days later that
# must not merge.
transcript(
    "dlt-2021q3",
    "DLT",
    "2021-11-04",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "Third quarter revenue was $1.42 billion, an increase of 9 percent. "
            "Freight volumes grew 4.8% despite network congestion. "
            "Fuel surcharges recovered most input cost inflation. "
            "We remain focused on service reliability.",
        ),
        (
            "CFO",
            "Quarterly operating ratio improved to 61.3%. "
            "Earnings per diluted share was $1.28 for the third quarter. "
            "We repurchased $250 million of stock in the quarter. "
            "Capital expenditures for 2021 should finish near $550 million.",
        ),
        QA_HEADING,
        ANALYST,
    ],
)
article(
    "dlt-art-1",
    "DLT",
    "2021-11-04",
    "q3 revenue $1.42 billion, up 9 percent. "
    "q3 earnings per diluted share $1.28. "
    "quarterly operating ratio improved to 61.3%. "
    "sees 2021 capital expenditures near $550 million.",
)
article(
    "dlt-art-late",
    "DLT",
    "2021-11-06",
    "shares of the carrier rose after the report. "
    "q3 earnings per diluted share $1.28.",
)

# Pairs 6-12: straightforward single-article events.
transcript(
    "emb-2021q4",
    "EMB",
    "2022-01-27",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "Fourth quarter revenue increased 19 percent to $733 million. "
            "Device shipments reached 1.9 million units. "
            "Gross margin was 54.5% on favorable mix. "
            "Our design win pipeline is the strongest in company history.",
        ),
        (
            "CFO",
            "Adjusted earnings per share was $1.61 for the quarter. "
            "For the first quarter we expect revenue of $700 million to $740 million. "
            "Inventory days improved sequentially.",
        ),
        QA_HEADING,
        ANALYST,
    ],
)
article(
    "emb-art-1",
    "EMB",
    "2022-01-27",
    "q4 revenue rose 19 percent to $733 million. "
    "q4 adjusted earnings per share $1.61. "
    "sees q1 revenue $700 million to $740 million. "
    "analysts expected q4 revenue of $718 million per refinitiv ibes data.",
)

transcript(
    "fgh-2021q2",
    "FGH",
    "2021-07-22",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "Second quarter comparable sales rose 11 percent. "
            "Revenue came in at $4.6 billion for the quarter. "
            "Digital orders now represent 38% of the mix. "
            "We expanded our loyalty program to 14 million members.",
        ),
        (
            "CFO",
            "Earnings per share was $2.05 in the second quarter. "
            "We raised our full year earnings outlook to $7.80 to $8.00 per share. "
            "Commodity inflation remains a watch item.",
        ),
        QA_OPERATOR,
        ANALYST,
    ],
)
article(
    "fgh-art-1",
    "FGH",
    "2021-07-22",
    "q2 comparable sales rose 11 percent. "
    "q2 revenue $4.6 billion. "
    "q2 earnings per share $2.05. "
    "sees fy earnings per share $7.80 to $8.00. "
    "commodity inflation remains a watch item.",
)

transcript(
    "grn-2020q3",
    "GRN",
    "2020-10-29",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "Third quarter production reached 412 megawatts. "
            "Revenue of $238 million grew 22 percent year over year. "
            "Our backlog now stands at $1.9 billion. "
            "Project execution stayed on schedule through the quarter.",
        ),
        (
            "CFO",
            "Quarterly earnings per share was $0.45. "
            "Liquidity ended the quarter at $640 million. "
            "We expect full year revenue near $950 million.",
        ),
        QA_HEADING,
        ANALYST,
    ],
)
article(
    "grn-art-1",
    "GRN",
    "2020-10-29",
    "q3 revenue $238 million, up 22 percent. "
    "q3 earnings per share $0.45. "
    "backlog stands at $1.9 billion. "
    "sees fy revenue near $950 million.",
)

transcript(
    "hlx-2021q4",
    "HLX",
    "2022-02-15",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "Fourth quarter net sales were $612 million, up 16 percent. "
            "Unit volumes grew 12 percent with pricing adding the rest. "
            "We completed the acquisition of two regional distributors. "
            "Integration work is tracking ahead of plan.",
        ),
        (
            "CFO",
            "Adjusted earnings per share came in at $1.94. "
            "Full year 2022 revenue should land between $2.45 billion and $2.55 billion. "
            "We expect capital spending of $120 million in 2022.",
        ),
        QA_OPERATOR,
        ANALYST,
    ],
)
article(
    "hlx-art-1",
    "HLX",
    "2022-02-16",
    "q4 net sales $612 million, up 16 percent. "
    "q4 adjusted earnings per share $1.94. "
    "sees fy 2022 revenue $2.45 billion to $2.55 billion. "
    "integration work is tracking ahead of plan. "
    "analysts expected $1.88 per share per refinitiv ibes data.",
)

transcript(
    "imc-2021q1",
    "IMC",
    "2021-04-20",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "First quarter premiums written grew 8 percent to $2.9 billion. "
            "Our combined ratio was 92.4% for the quarter. "
            "Policy retention remains above 90%. "
            "Catastrophe losses were modest at $65 million.",
        ),
        (
            "CFO",
            "Operating earnings per share was $3.12 in the first quarter. "
            "Book value per share ended the quarter at $68.40. "
            "We repurchased 1.2 million shares during the period.",
        ),
        QA_HEADING,
        ANALYST,
    ],
)
# duplicate bullet inside one article body
article(
    "imc-art-1",
    "IMC",
    "2021-04-20",
    "q1 premiums written grew 8 percent to $2.9 billion. "
    "q1 operating earnings per share $3.12. "
    "q1 combined ratio 92.4%. "
    "q1 operating earnings per share $3.12. "
    "book value per share $68.40.",
)

transcript(
    "jkl-2020q2",
    "JKL",
    "2020-08-06",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "Second quarter revenue declined 6 percent to $318 million amid the downturn. "
            "Cost actions delivered $40 million of savings in the quarter. "
            "We kept every plant operational through the period. "
            "Order intake stabilized exiting the quarter.",
        ),
        (
            "CFO",
            "Adjusted earnings per share was $0.62 for the second quarter. "
            "We ended the period with net debt of $410 million. "
            "Full year free cash flow should exceed $150 million.",
        ),
        QA_OPERATOR,
        ANALYST,
    ],
)
article(
    "jkl-art-1",
    "JKL",
    "2020-08-07",
    "q2 revenue fell 6 percent to $318 million. "
    "q2 adjusted earnings per share $0.62. "
    "sees fy free cash flow above $150 million. "
    "order intake stabilized exiting the quarter.",
)

transcript(
    "kmn-2022q1",
    "KMN",
    "2022-03-09",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "First quarter revenue rose 12 percent to $905 million. "
            "Average selling prices increased 5.5% in the quarter. "
            "We announced a new plant in Texas with 450 jobs. "
            "Supply chain constraints eased late in the quarter.",
        ),
        (
            "CFO",
            "Earnings per share was $1.33 for the first quarter. "
            "The board raised the quarterly dividend to $0.29 per share. "
            "We see fiscal year revenue of $3.6 billion to $3.75 billion.",
        ),
        QA_HEADING,
        ANALYST,
    ],
)
article(
    "kmn-art-1",
    "KMN",
    "2022-03-09",
    "q1 revenue rose 12 percent to $905 million. "
    "q1 earnings per share $1.33. "
    "raises quarterly dividend to $0.29 per share. "
    "sees fy revenue $3.6 billion to $3.75 billion.",
)

# A transcript that opens directly with Q&A: rejected at ingest.
transcript(
    "qao-2021q2",
    "QAO",
    "2021-06-01",
    [
        ("Questions and Answers", "Operator instructions follow."),
        ("Analyst", "My first question is about synergies from the merger."),
        ("CEO", "We expect $30 million of synergies."),
    ],
)

# A transcript with no covering article: stays unpaired.
transcript(
    "nop-2021q3",
    "NOP",
    "2021-09-15",
    [
        ("Operator", OPERATOR_INTRO),
        (
            "CEO",
            "Third quarter revenue was $77 million, up 3 percent. "
            "We completed our warehouse automation rollout.",
        ),
        QA_HEADING,
        ANALYST,
    ],
)

# An article with no matching transcript: stays unused.
article(
    "zzz-art-1",
    "ZZZ",
    "2021-12-01",
    "q3 revenue $55 million. q3 earnings per share $0.12.",
)


def write(path, rows):
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row, separators=(",", ":")) + "\n")


write(HERE / "transcripts.jsonl", transcripts)
write(HERE / "articles.jsonl", articles)
print(f"wrote {len(transcripts)} transcripts, {len(articles)} articles")
