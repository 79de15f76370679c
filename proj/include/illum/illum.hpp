#pragma once

#include "illum/config.hpp"
#include "illum/core.hpp"
#include "illum/decision.hpp"
#include "illum/description.hpp"
#include "illum/domain.hpp"
#include "illum/experiment.hpp"
#include "illum/fit.hpp"
#include "illum/formula.hpp"
#include "illum/io.hpp"
#include "illum/metrics.hpp"
#include "illum/models.hpp"
#include "illum/plot.hpp"
#include "illum/question.hpp"
#include "illum/reachability.hpp"
#include "illum/repl.hpp"
#include "illum/session.hpp"
#include "illum/smt.hpp"

// service.hpp is left out on purpose: it drags in cpp-httplib and its
// system headers. Include it explicitly where needed.
