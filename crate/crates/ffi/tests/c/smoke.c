#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "heatframe.h"

static char *slurp(const char *path) {
    FILE *f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long n = ftell(f);
    fseek(f, 0, SEEK_SET);
    char *buf = malloc((size_t)n + 1);
    if (fread(buf, 1, (size_t)n, f) != (size_t)n) {
        fclose(f);
        free(buf);
        return NULL;
    }
    buf[n] = '\0';
    fclose(f);
    return buf;
}

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(int argc, char **argv) {
    CHECK(argc == 2);
    char *src = slurp(argv[1]);
    CHECK(src != NULL);

    HfOptions opts = hf_options_default();
    HfProblem *p = NULL;
    HfStatus s = hf_solve(src, "wall-3d", &opts, NULL, &p);
    CHECK(s == HF_STATUS_OK && p != NULL);

    double lb = 0.0, ub = 0.0;
    CHECK(hf_bounds(p, &lb, &ub) == HF_STATUS_OK);
    CHECK(fabs(lb - 1.0 / (31.0 * 0.05)) < 1e-12);
    CHECK(fabs(ub - 1.0 / ((10.0 + 10.0 + 11.0 / 3.0) * 0.05)) < 1e-12);

    size_t len = 0;
    CHECK(hf_ports(p, NULL, NULL, &len) == HF_STATUS_NOT_APPLICABLE);

    char *json = NULL;
    CHECK(hf_report_json(p, &json) == HF_STATUS_OK);
    CHECK(strstr(json, "\"schema\": \"report_v1\"") != NULL);
    hf_string_free(json);

    CHECK(strcmp(hf_status_message(HF_STATUS_NULL_POINTER), "null pointer argument") == 0);
    hf_problem_free(p);
    free(src);
    printf("lb=%.6f ub=%.6f version=%s\n", lb, ub, hf_version());
    return 0;
}
