#pragma once

namespace pinned {

// Reference values from a 50-digit evaluation.
struct GammaPoint {
    double a, x, p, q;
};
constexpr GammaPoint kGamma[] = {
    {0.5, 0.1, 0.34527915398142297956, 0.65472084601857702044},
    {0.5, 2.0, 0.9544997361036415856, 0.045500263896358414401},
    {1.0, 1.0, 0.6321205588285576784, 0.3678794411714423216},
    {2.5, 3.0, 0.69378108158672159912, 0.30621891841327840088},
    {7.0, 5.0, 0.23781653702706129488, 0.76218346297293870512},
    {7.0, 20.0, 0.99974487750414369927, 0.00025512249585630073291},
    {10.0, 3.0, 0.0011024881301154797421, 0.99889751186988452026},
    {0.1, 0.01, 0.66262125995447979172, 0.33737874004552020828},
    {50.0, 45.0, 0.24680203440017027271, 0.75319796559982972729},
    {3.5, 0.7, 0.014428735551011843152, 0.98557126444898815685},
};

struct BetaPoint {
    double a, b, x, value;
};
constexpr BetaPoint kBeta[] = {
    {0.5, 0.5, 0.3, 0.36901011956554537504},
    {2.0, 3.0, 0.4, 0.5248},
    {5.0, 2.0, 0.9, 0.885735},
    {3.5, 50.5, 0.05, 0.37749246514285783067},
    {1.0, 1.0, 0.25, 0.25},
    {10.0, 10.0, 0.5, 0.5},
    {0.7, 4.0, 0.1, 0.49928037509849194305},
    {50.0, 3.5, 0.98, 0.95584574278840848813},
    {2.5, 60.0, 0.02, 0.21665854577747230975},
    {20.0, 5.0, 0.7, 0.11107522326092218691},
};

} // namespace pinned
