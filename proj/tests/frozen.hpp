#pragma once

// Reference values produced by tests/oracles/frozen_values.py (mpmath, 50 digits).

namespace frozen {

inline constexpr double kLogGamma7p3 = 7.1478925230222490328;
inline constexpr double kLogGamma1p1iRe = -0.65092319930185633889;
inline constexpr double kLogGamma1p1iIm = -0.30164032046753319789;
inline constexpr double kLogBeta08_07 = 0.53370916256674932551;
inline constexpr double kRegIncBeta04_08_07 = 0.37507868143199871426;

inline constexpr double kLogisticCdf2_1_05 = 0.88079707797788244406;
inline constexpr double kStdGlCdf12_08_27 = 0.98633116556404955573;
inline constexpr double kCharfn1Re = 0.90373204229509160273;  // p = {0, 0.2, 0.8, 0.7}
inline constexpr double kCharfn1Im = 0.043868971412603184658;
inline constexpr double kMgfQuadrature = 1.0433444057807894048;  // p = {0, 0.2, 0.8, 0.9}
inline constexpr double kLevyDrift015_08_07 = 0.037141895207030614463;

inline constexpr double kDrift015_08_085 = 0.033181246891684184937;
inline constexpr double kEq24AtmCall1y = 0.11899610339901404601;  // r = 0.02, S0 = 1
inline constexpr double kEq24AtmIv1y = 0.27635666844174674288;

// Adam on f(w) = w^2 from w = 1, lr 0.1
inline constexpr double kAdamW1 = 0.9000000005;
inline constexpr double kAdamW2 = 0.8004122286917928;
inline constexpr double kAdamW3 = 0.7015862729460303;

// 1-32-32-3 ReLU net, softplus output, seed 0, input 0.5
inline constexpr double kGoldenNet[3] = {1.0189453326740962326, 0.7337735930330901285,
                                         0.80750790183648517155};

}  // namespace frozen
