from overdet_lab import BoundaryShape, TensorGrid, build_bundle, build_domain, run_identity_suite
from overdet_lab.stability import gap_and_oscillation, positivity_certificate
from overdet_lab.terminal_output import TerminalOutput
import logging

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    datefmt='%H:%M:%S'
)


def main(eps: float = 0.03):
    """Solve the disk and a cos 2θ perturbation and compare their identity reports."""

    output = TerminalOutput()

    for name, shape in (("disk", BoundaryShape(0.0)), ("cos2", BoundaryShape.preset("cos2", eps))):
        geom = build_domain(shape)
        grid = TensorGrid(geom, 32, 64)
        bundle = build_bundle(geom, grid)

        output.print_header(f"{name} (eps={shape.epsilon:g})")
        output.print_identity_table(run_identity_suite(bundle))

        # The ball gap is controlled by the oscillation of h and the boundary deviation
        gap = gap_and_oscillation(bundle)
        print(f"z = ({bundle.z[0]:.3e}, {bundle.z[1]:.3e})  R^2 = {bundle.r2:.12f}  c = {bundle.c:.12f}")
        print(f"rho_2^2 - rho_1^2 = {gap.lhs:.6e} <= {gap.rhs:.6e}")

        certificate = positivity_certificate(bundle)
        print(f"c_Omega = {certificate.c_omega:.6f}  eta = {certificate.eta:.6f}")


if __name__ == "__main__":
    main()
