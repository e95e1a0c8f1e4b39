// Streams simulated heavy-tailed data through three sequences and prints
// their sets at a few checkpoints.
#include <cstdio>

#include "anycs/anycs.hpp"

int main() {
    using namespace anycs;
    GeneratorSpec gen;
    gen.family = Family::student_t;
    gen.mean = 1.0;
    gen.variance = 25.0;
    gen.seed = 2024;
    const auto xs = generate(gen, 2000);

    CsConfig cfg;
    cfg.alpha = 0.05;
    cfg.sigma2 = 25.0;
    DsEstimator ds(cfg, LambdaSchedule::ds_tuned(cfg.alpha, cfg.sigma2));
    SnEstimator sn(cfg, LambdaSchedule::sn_tuned(cfg.alpha, cfg.sigma2));
    CatoniEstimator cat(cfg, LambdaSchedule::catoni_tuned(cfg.alpha, cfg.sigma2));

    std::printf("%6s  %-28s %-28s %s\n", "t", "dubins-savage", "catoni", "self-normalized");
    for (std::size_t t = 1; t <= xs.size(); ++t) {
        const Observation obs{t, xs[t - 1]};
        ds.update(obs);
        sn.update(obs);
        cat.update(obs);
        if (t == 10 || t == 100 || t == 500 || t == 2000) {
            const auto a = ds.set(), b = cat.set();
            std::printf("%6zu  [%8.3f, %8.3f]         [%8.3f, %8.3f]         %s\n", t, a.lower(), a.upper(),
                        b.lower(), b.upper(), serialize_set(sn.set()).c_str());
        }
    }
    return 0;
}
