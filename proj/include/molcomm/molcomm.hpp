#ifndef MOLCOMM_MOLCOMM_HPP
#define MOLCOMM_MOLCOMM_HPP

#include "molcomm/errors.hpp"
#include "molcomm/vec3.hpp"
#include "molcomm/environment.hpp"
#include "molcomm/poisson.hpp"
#include "molcomm/channel.hpp"
#include "molcomm/mutual_info.hpp"
#include "molcomm/random.hpp"
#include "molcomm/particle_sim.hpp"
#include "molcomm/error_analysis.hpp"
#include "molcomm/detectors.hpp"
#include "molcomm/monte_carlo.hpp"
#include "molcomm/csv.hpp"
#include "molcomm/config.hpp"
#include "molcomm/experiments.hpp"

#endif  // MOLCOMM_MOLCOMM_HPP
