#include <math.h>
#include <stdio.h>
#include <string.h>
#include "kvgeom.h"

int main(void) {
    KvgAlgebra *alg = NULL;
    if (kvg_algebra_builtin("so3", &alg) != KVG_STATUS_OK) return 10;
    if (kvg_algebra_dim(alg) != 3) return 11;
    double x[3] = {0.1, -0.05, 0.2}, y[3] = {0.03, 0.12, -0.07};
    double a[3], b[3], r = -1.0;
    if (kvg_extract_ab(alg, x, y, a, b) != KVG_STATUS_OK) return 12;
    if (kvg_eq1_residual(alg, x, y, a, b, &r) != KVG_STATUS_OK) return 13;
    if (!(r < 1e-7)) return 14;
    if (kvg_algebra_builtin("e8", &alg) != KVG_STATUS_INVALID_ARGUMENT) return 15;
    if (kvg_last_error_message() == NULL) return 16;
    char *json = NULL;
    if (kvg_bch_json(3, KVG_ORDER_XY, &json) != KVG_STATUS_OK) return 17;
    if (strstr(json, "\"xy\"") == NULL) return 18;
    kvg_string_free(json);
    kvg_algebra_free(alg);
    printf("ok\n");
    return 0;
}
