"""Regenerate the bundled scripted replay for the Lean Startup scenario.

Usage: python scripts/make_lean_fixture.py [OUT]

Per-tag order matters, cross-tag order does not (the scripted backend keeps a
cursor per tag). The session below runs seven messages:

  0 alex  PHASE Build / ASSIGN jamie     (one garbage reply first)
  1 jamie KB empty -> solver path (first translation invalid); design RAG internal
  2 alex  PHASE Measure / ASSIGN sam
  3 sam   KB has 2 mvp rows -> graph path; market RAG falls back to web search
  4 alex  ASSIGN taylor
  5 taylor KB has 1 row -> solver path; sales RAG internal
  6 alex  PHASE Learn / CONCLUDE
"""
import json
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "agentteam" / "data" / "lean_startup.script.jsonl"
TEAM = ["alex", "sam", "jamie", "taylor"]


def sections(beliefs, response, future):
    return f"My Beliefs:\n{beliefs}\nResponse:\n{response}\nFuture Work:\n{future}\n"


def belief_updates(author, turn, about):
    # one update per team member, in team order
    out = []
    for owner in TEAM:
        if owner == author:
            out.append(f"[turn {turn}] {about['self']}")
        else:
            out.append(f"[turn {turn}, {owner}'s view] {about['other']}")
    return out


def build():
    e = []

    def add(tag, *responses):
        e.extend({"tag": tag, "response": r} for r in responses)

    add("boss_directive",
        "PHASE Build\nASSIGN jamie :: Design the MVP core features for the smart home energy manager",
        "Sam should look at the market next.",
        "PHASE Measure\nASSIGN sam :: Analyse early adopter feedback on the MVP",
        "ASSIGN taylor :: Assess sales potential and a go-to-market strategy for the MVP",
        "PHASE Learn\nCONCLUDE :: Persevere. The MVP dashboard matches what early adopters value"
        " (lower bills); simplify onboarding and launch with utility rebate bundles on a monthly subscription.")

    add("nl_to_pattern", "mvp | * | *", "mvp | * | *", "* | value | *")
    add("nl_to_asp",
        "task(mvp_core.\n",
        "task(mvp_core).\nassigned(mvp_core,jamie).\n"
        "in_progress(X) :- task(X), assigned(X,jamie), not completed(X).\n",
        "customer(early_adopters).\nvalues(early_adopters,bill_savings).\n"
        "pitch(C,bill_savings) :- customer(C), values(C,bill_savings).\n")
    add("models_to_nl",
        "The MVP core task is assigned to Jamie and is still in progress.",
        "Early adopters value bill savings, so the pitch should lead with bill savings.")
    add("rows_to_nl", "The MVP targets homeowners and includes an energy dashboard.")

    add("grade_doc",
        "relevant", "irrelevant", "irrelevant",       # jamie / design
        "irrelevant", "irrelevant", "Irrelevant.",    # sam / market (last one needs the retry)
        "irrelevant",
        "relevant", "relevant")                       # taylor / sales
    add("rewrite_query", "smart home energy management early adopter feedback")
    add("synthesize",
        "[1] A dashboard MVP should show live consumption, a daily cost estimate and one saving tip.",
        "[1] Early adopters report savings of 8-12% and ask for easier setup. [2] Bill savings drive purchases.",
        "[1] Utility rebate bundles shorten sales cycles. [2] Users accept $3-8 monthly subscriptions.")

    add("worker_turn",
        sections(
            "Alex wants a testable MVP quickly; Sam and Taylor will need something concrete to measure and sell.",
            "MVP scope: a real-time energy dashboard for homeowners with a daily cost estimate and one"
            " personalised saving tip. Device pairing under two minutes, onboarding in at most five steps.",
            "Measure how early adopters use the dashboard and whether onboarding completes; Sam should analyse the feedback."),
        sections(
            "Jamie has shipped the dashboard MVP; Alex expects evidence on whether to persevere or pivot.",
            "Early adopter feedback: users value bill savings above everything else, savings of 8-12% are"
            " reported, and several abandon setup during device pairing. Onboarding needs simplifying.",
            "Taylor should test pricing and a go-to-market message built around bill savings."),
        sections(
            "Sam's data says bill savings sell; Jamie is simplifying onboarding; Alex is close to a decision.",
            "Sales plan: lead the pitch with bill savings, bundle with utility rebate programmes, and offer a"
            " monthly subscription in the three to eight dollar range.",
            "Alex can decide to persevere; next iteration should track conversion from rebate partners."),
    )
    add("extract_triples",
        "mvp | targets | homeowners\nmvp | includes | energy dashboard\nmvp_core | assigned_to | jamie\n",
        "early adopters | value | bill savings\nmvp | needs | simpler onboarding\nnot a triple line\n",
        "go to market | leads_with | bill savings\nmvp | targets | homeowners\n")

    add("update_beliefs",
        *belief_updates("jamie", 1, {
            "self": "I scoped the MVP as an energy dashboard with fast device pairing and short onboarding.",
            "other": "Jamie believes a simple real-time dashboard is the right MVP and wants it measured next."}),
        *belief_updates("sam", 3, {
            "self": "I found that bill savings drive adoption and onboarding is the main drop-off point.",
            "other": "Sam believes customers buy for bill savings and that onboarding must get simpler."}),
        *belief_updates("taylor", 5, {
            "self": "I proposed leading with bill savings, rebate bundles and a low monthly subscription.",
            "other": "Taylor believes a savings-led pitch with rebate bundles will sell and is ready to launch."}),
    )

    add("single",
        "A smart home energy management system should start with a simple MVP dashboard, test it with"
        " early adopters, and iterate on pricing and onboarding based on feedback.")
    add("cot",
        "Step 1: define the MVP as an energy dashboard. Step 2: run it with early adopters and measure"
        " savings and onboarding completion. Step 3: decide to persevere or pivot from that data."
        " Final answer: build the dashboard MVP, measure savings, iterate.")

    search = {
        "search": "smart home energy management early adopter feedback",
        "results": [
            {"title": "Early adopter survey on home energy apps",
             "snippet": "Early adopters report 8-12% savings and ask for easier device setup.",
             "url": "https://example.org/energy-survey"},
            {"title": "Why households buy energy monitors",
             "snippet": "Bill savings are the leading purchase driver for home energy monitoring.",
             "url": "https://example.org/purchase-drivers"},
        ],
    }
    return e + [search]


def main(argv):
    out = Path(argv[1]) if len(argv) > 1 else OUT
    lines = [json.dumps(obj, ensure_ascii=False, sort_keys=True) for obj in build()]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} entries to {out}")


if __name__ == "__main__":
    main(sys.argv)
