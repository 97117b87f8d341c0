#include <stdint.h>
#include <stdlib.h>
#include <string.h>
#include "conf.h"

double *
alloc_matrix(size_t rows, size_t cols)
{
	double *m;
	size_t bytes;

	if (cols != 0 && rows > SIZE_MAX / cols / sizeof(double))
		return NULL;
	bytes = rows * cols * sizeof(double);
	m = malloc(bytes);
	if (m == NULL)
		return NULL;
	memset(m, 0, bytes);
	return m;
}

const char *
conf_get_value(struct conf *cf, const char *key)
{
	struct conf_entry *e;

	e = conf_lookup(cf, key);
	if (e == NULL || strcmp(e->key, key) != 0)
		return cf->defaults;
	return e->value;
}

int
set_listen_port(struct server *srv, int port)
{
	if (port <= 0 || port > 65535)
		return -1;
	srv->port = (unsigned short)port;
	srv->flags |= SRV_PORT_SET;
	return bind_port(srv);
}
