#include <stdio.h>
#include "mubsearch.h"
int main(void) {
  MubBasisSet *s = NULL;
  if (mub_prime_construction(5, &s) != MUB_STATUS_OK) return 1;
  bool ok; double obj;
  mub_basis_set_verify(s, 1e-6, &ok, &obj, NULL);
  printf("version %s is_mub %d obj %g\n", mub_version(), ok, obj);
  mub_basis_set_free(s);
  if (mub_prime_construction(6, &s) == MUB_STATUS_OK) return 1;
  char buf[128]; mub_last_error_message(buf, sizeof buf); printf("err: %s\n", buf);
  return 0;
}
