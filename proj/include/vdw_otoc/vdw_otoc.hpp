#ifndef VDW_OTOC_VDW_OTOC_HPP
#define VDW_OTOC_VDW_OTOC_HPP

#include "vdw_otoc/errors.hpp"
#include "vdw_otoc/spline.hpp"
#include "vdw_otoc/potential.hpp"
#include "vdw_otoc/dvr.hpp"
#include "vdw_otoc/spectral.hpp"
#include "vdw_otoc/sensitivity.hpp"
#include "vdw_otoc/presets.hpp"

#endif  // VDW_OTOC_VDW_OTOC_HPP
