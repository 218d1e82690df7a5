#include <math.h>
#include <stdio.h>
#include <string.h>

#include "epsconv.h"

#define CHECK(cond)                                                      \
  do {                                                                   \
    if (!(cond)) {                                                       \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond);         \
      return 1;                                                          \
    }                                                                    \
  } while (0)

int main(void) {
  EcFunction *f = NULL;
  CHECK(ec_function_from_json("{\"type\": \"neg_sqrt\"}", &f) == EC_STATUS_OK);
  CHECK(ec_function_dim(f) == 1);

  double lo = 0, hi = 0;
  CHECK(ec_eps_subdiff_interval(f, 0.0, 1.0, &lo, &hi) == EC_STATUS_OK);
  CHECK(isinf(lo) && lo < 0);
  CHECK(fabs(hi + 0.25) < 5e-3);

  double v = 0, xs = -1.0;
  bool edge = true;
  CHECK(ec_conjugate_at(f, &xs, 1, &v, &edge) == EC_STATUS_OK);
  CHECK(fabs(v - 0.25) < 1e-6 && !edge);
  ec_function_free(f);

  EcSet *s = NULL;
  CHECK(ec_set_from_json("{\"type\": \"ball\", \"center\": [1, 0], \"radius\": 1}", &s) == EC_STATUS_OK);
  bool in = false;
  double p[2] = {0.4, 0.4};
  CHECK(ec_polar_contains(s, p, 2, &in) == EC_STATUS_OK && in);
  p[0] = 0.5;
  CHECK(ec_polar_contains(s, p, 2, &in) == EC_STATUS_OK && !in);
  ec_set_free(s);

  CHECK(ec_function_from_json("{\"type\": \"nope\"}", &f) == EC_STATUS_PARSE);
  CHECK(f == NULL);
  CHECK(strlen(ec_last_error_message()) > 0);
  puts("ok");
  return 0;
}
