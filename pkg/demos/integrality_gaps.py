"""How far can the continuous relaxation be from the integral robust optimum?

Two small families show it: a two-item selection instance where the gap is 4/3,
and a stack of parallel two-arc paths where the gap equals the number of paths.
"""
from rtst import relaxation_value, solve_exact
from rtst.model import gen_selection_gap_instance, gen_sp_gap_instance


def main():
    inst = gen_selection_gap_instance()
    exact, relax = solve_exact(inst).value, relaxation_value(inst)
    print("Two items, both must be bought; the adversary has one budget row.")
    print(f"  integral optimum   {exact:.4f}")
    print(f"  relaxation         {relax:.4f}")
    print(f"  ratio              {exact / relax:.4f}\n")

    print("Parallel paths: each path is free to start now but costly to finish later.")
    print("   m   integral   relaxation   ratio")
    for m in range(1, 7):
        inst = gen_sp_gap_instance(m)
        exact, relax = solve_exact(inst).value, relaxation_value(inst)
        print(f"  {m:2d}   {exact:8.4f}   {relax:10.4f}   {exact / relax:5.2f}")
    print("\nThe relaxation lets the recourse spread over all paths, so the adversary's")
    print("budget gets diluted; an integral path takes the full increase.")


if __name__ == "__main__":
    main()
