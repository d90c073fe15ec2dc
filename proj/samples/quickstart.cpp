// Copyright 2026 The Spinforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Designs a selective 90x on the proton of a 1H-13C pair, then checks it.

#include "spinforge/spinforge.hpp"

#include <cstdio>

int main(int argc, char** argv) {
    using namespace spinforge;
    const std::string path = argc > 1 ? argv[1] : SPINFORGE_SAMPLES "/het2.spins";
    const SpinSystem sys = load_spin_system(path);

    GrapeOptions opt;
    opt.mode = GradMode::phase_only_exact;
    opt.max_iter = 500;
    opt.seed = 7;
    const auto prog = PulseProgram::phase_only("H", 2500, 250, 10e-6);
    const Matrix target = named_gate("x90(1)", sys.size()).matrix();
    const auto res = optimize(make_problem(sys, target, prog, nominal_ensemble(), opt));

    std::printf("fidelity %.9f after %d iterations\n", res.fidelity, res.iterations);
    for (double s : {0.95, 1.0, 1.05})
        std::printf("  B1 x%.2f: %.9f\n", s, ensemble_fidelity(sys, res.program, Operator::unitary(target), b1_ensemble({s})));
    return res.fidelity > 0.999 ? 0 : 1;
}
