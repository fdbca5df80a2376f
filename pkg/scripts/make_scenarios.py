"""Write the bundled scenario files from the reference recipe table."""
from pathlib import Path

from kitchenforge.scenario import dump_scenario, reference_scenario

DATA = Path(__file__).resolve().parents[1] / "src" / "kitchenforge" / "data"

HEADER = """\
# Reference kitchen: recipe catalog on {hobs} standard hob(s), order x{scale}.
# Zones 1-4 take Pot(1); 5 (circles 1+2) and 6 (circles 3+4) take Pot(2);
# 7 (circles 1+2+3) takes Pot(3).  Zones sharing a circle exclude each other.
"""

if __name__ == "__main__":
    for name, hobs, scale in [("reference.scn", 1, 1), ("reference_x4_one_hob.scn", 1, 4),
                              ("reference_x4_four_hobs.scn", 4, 4)]:
        text = HEADER.format(hobs=hobs, scale=scale) + "\n" + dump_scenario(reference_scenario(hobs, scale))
        (DATA / name).write_text(text)
        print("wrote", DATA / name)
