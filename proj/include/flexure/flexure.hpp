#pragma once

#include "flexure/config.hpp"
#include "flexure/degrees.hpp"
#include "flexure/design_state.hpp"
#include "flexure/driver.hpp"
#include "flexure/element.hpp"
#include "flexure/errors.hpp"
#include "flexure/fem.hpp"
#include "flexure/field_ops.hpp"
#include "flexure/io.hpp"
#include "flexure/mesh.hpp"
#include "flexure/metrics.hpp"
#include "flexure/optimizer.hpp"
#include "flexure/problem.hpp"
#include "flexure/responses.hpp"
#include "flexure/variant.hpp"
