// Generated by gen_projection_fixtures.py with PROJ 9.5.1. Do not edit.
#pragma once

#include <array>

namespace geopatch::fixtures {

struct ForwardCase {
  int epsg;
  double lon, lat;
  double x, y;
};

struct ChainCase {
  int src_epsg, dst_epsg;
  double x, y;
  double out_x, out_y;
};

inline constexpr std::array<ForwardCase, 28> kForwardCases{{
    ForwardCase{32618, -76.0, 39.0, 413407.321973, 4317252.164630},
    ForwardCase{32618, -75.0, 0.0, 500000.000000, 0.000000},
    ForwardCase{32618, -77.5, 45.2, 303648.799038, 5008208.824335},
    ForwardCase{32618, -72.1, 10.5, 817456.488449, 1162160.098313},
    ForwardCase{32618, -79.9, 60.0, 226856.106277, 6661535.455969},
    ForwardCase{32618, -75.3, -30.0, 471065.627673, -3318823.227805},
    ForwardCase{32619, -69.0, 42.0, 500000.000000, 4649776.224819},
    ForwardCase{32619, -70.2, 41.0, 399077.120199, 4539450.480333},
    ForwardCase{32619, -66.5, 43.5, 702114.277507, 4819377.640811},
    ForwardCase{32619, -71.9, 38.0, 245361.196918, 4209784.389599},
    ForwardCase{32619, -68.1, 55.0, 557570.870374, 6095161.821911},
    ForwardCase{32719, -69.0, -33.0, 500000.000000, 6348713.056040},
    ForwardCase{32719, -70.5, -10.0, 335588.969348, 8894213.730603},
    ForwardCase{32719, -66.0, -50.0, 714984.236735, 4457055.981351},
    ForwardCase{32719, -71.0, -0.5, 277412.986275, 9944701.050853},
    ForwardCase{32719, -68.4, -75.0, 517333.992640, 1676305.518864},
    ForwardCase{5070, -96.0, 23.0, 0.000000, 0.000000},
    ForwardCase{5070, -77.0, 39.0, 1619396.691557, 1937334.606228},
    ForwardCase{5070, -69.5, 42.3, 2142677.254097, 2445158.681945},
    ForwardCase{5070, -120.0, 47.0, -1814348.816578, 2898017.013492},
    ForwardCase{5070, -100.0, 30.0, -385417.221283, 777487.136573},
    ForwardCase{5070, -85.0, 25.0, 1121509.358567, 283099.332077},
    ForwardCase{5070, -96.0, 49.0, 0.000000, 2888222.097391},
    ForwardCase{3857, 0.0, 0.0, 0.000000, 0.000000},
    ForwardCase{3857, -69.0, 42.0, -7681044.864736, 5160979.444050},
    ForwardCase{3857, 120.0, -33.5, 13358338.895193, -3961860.217446},
    ForwardCase{3857, 179.9, 80.0, 20026376.393710, 15538711.096309},
    ForwardCase{3857, -45.0, 60.0, -5009377.085697, 8399737.889818},
}};

inline constexpr std::array<ChainCase, 5> kChainCases{{
    ChainCase{32619, 5070, 186585.0, 4505085.0, 1934200.741604, 2196600.069147},
    ChainCase{32619, 5070, 423315.0, 4745415.0, 2091235.719016, 2495333.745503},
    ChainCase{32619, 5070, 186585.0, 4745415.0, 1865577.965468, 2428569.825151},
    ChainCase{32619, 5070, 423315.0, 4505085.0, 2159318.418732, 2262930.201832},
    ChainCase{32619, 5070, 304950.0, 4625250.0, 2012535.832577, 2346041.247636},
}};

}  // namespace geopatch::fixtures
