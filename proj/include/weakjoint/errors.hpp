#pragma once

#include <stdexcept>
#include <string>

namespace weakjoint {

// Base class for all domain errors raised by the library. Operational
// failures (bad arguments, I/O) use the standard exceptions directly.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// |<psi_f|psi_i>| fell at or below the overlap floor; weak values are
// undefined for (near-)orthogonal selections.
struct OrthogonalSelection : Error {
    using Error::Error;
};

struct NonHermitianInput : Error {
    using Error::Error;
};

struct TraceNotOne : Error {
    using Error::Error;
};

// The stacked linear system of weak-value targets is inconsistent.
struct Infeasible : Error {
    using Error::Error;
};

// z . I vanished, so the entangled realization degenerates.
struct DegenerateRealization : Error {
    using Error::Error;
};

// The symmetrized operator set failed the linear-independence check.
struct DependentSymmetrizedSet : Error {
    using Error::Error;
};

// Consecutive tracked roots jumped by more than the continuity bound.
struct RootTrackingBreak : Error {
    using Error::Error;
};

// min |F| dropped below the fit floor; the fit window must shrink.
struct AmplitudeCollapse : Error {
    using Error::Error;
};

// Grid states violate the edge-clearance requirements.
struct EdgeClipping : Error {
    using Error::Error;
};

}  // namespace weakjoint
