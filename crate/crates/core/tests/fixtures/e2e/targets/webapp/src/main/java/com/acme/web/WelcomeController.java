package com.acme.web;

import java.io.IOException;
import java.io.PrintWriter;

public class WelcomeController extends HttpServlet {

    public void showWelcome(HttpServletRequest req, HttpServletResponse resp) throws IOException {
        String visitor = req.getParameter("name");
        if (visitor == null || visitor.isEmpty()) {
            visitor = "friend";
        }
        resp.setContentType("text/html");
        PrintWriter writer = resp.getWriter();
        writer.println("<html><body>");
        writer.println("<h1>Hello, " + visitor + "!</h1>");
        writer.println("</body></html>");
    }

    public void renderFarewell(HttpServletRequest request, HttpServletResponse response) throws IOException {
        String name = request.getParameter("name");
        response.setContentType("text/html");
        response.setCharacterEncoding("UTF-8");
        PrintWriter out = response.getWriter();
        if (name == null) {
            name = "guest";
        }
        out.println("<html><body>");
        out.println("<h1>Goodbye, " + name + "!</h1>");
        out.println("<p>See you soon.</p>");
        out.println("</body></html>");
    }

    @Override
    public String toString() {
        return "WelcomeController[" + getServletName() + "]";
    }
}
